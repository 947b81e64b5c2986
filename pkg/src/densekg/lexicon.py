"""Word lists backing the rule tagger and the verb inflector.

The lists are tuned for short everyday-event phrases: common verbs in
base form, attribute/emotion adjectives, and the subject tokens that
annotators actually write. OOV tokens simply tag OTHER, which leaves
them untouched by conjugation.
"""

from __future__ import annotations

SUBJECT_PRONOUNS = frozenset(
    {"he", "she", "they", "i", "we", "you", "it", "personx", "persony", "x", "y"}
)

# Base -> third-person-singular exceptions.
IRREGULAR_THIRD_PERSON = {"be": "is", "have": "has", "do": "does", "go": "goes"}
IRREGULAR_LEMMA = {v: k for k, v in IRREGULAR_THIRD_PERSON.items()}

# Modals take no -s.
MODAL_VERBS = frozenset(
    {"can", "could", "may", "might", "must", "shall", "should", "will", "would"}
)

VERB_BASES = frozenset(
    """
    accept accomplish ache achieve acquire act add admire admit adopt advise agree aim
    allow announce answer apologize appear applaud apply appreciate approach argue
    arrange arrest arrive ask assist attend avoid bake be bear beat become beg begin
    behave believe belong bend bet bite blame bless blow blush boast boil book borrow
    bother bounce bow brag break breathe bring brush build burn burst buy buzz call calm
    camp care carry catch celebrate change charge chase chat cheat check cheer chew
    choose chop claim clap clash clean clear climb cling close collect comb come
    comfort commit compare compete complain complete compliment confess confirm
    congratulate connect consider contact continue cook copy correct cough count cover
    crash crawl create cross cry cuddle cut dance dare deal decide decorate defend
    delay deliver demand deny describe deserve design destroy develop dial die dig
    discover discuss dislike dive divorce do donate doubt drag draw dream dress drink
    drive drop dry earn eat email embrace emerge employ encourage end enjoy enter
    entertain escape exchange excuse exercise expect explain explore express fail fall
    fear feed feel fight fill find finish fix flee flirt fly focus fold follow forget
    forgive freeze frown fry gain gather get give glance go grab graduate greet grieve
    grin grow guess guide handle hang happen hate have heal hear help hesitate hide
    hire hit hold hop hope hug hunt hurry hurt ignore imagine impress improve include
    inform injure insist inspire insult intend introduce invest invite join joke jump
    keep kick kiss kneel knock know land laugh lay lead lean leap learn leave lend let
    lie lift like listen live lock look lose love make manage march marry match meet
    melt mention mess mind miss mix moan mop mourn move mow nap need nod notice obey
    offer open order own pack paint panic park participate pass pause pay perform
    phone pick plan plant play plead please pledge point polish ponder pout practice
    praise pray prepare present pretend prevent promise propose protect protest prove
    provide pull punch punish purchase push put question quit race rage raise reach
    react read realize receive recover refuse regret rejoice relax release remain
    remember remind remove rent repair repeat reply report request rescue respond rest
    retire return reveal ride ring rise risk roll rub run rush save say scold scream
    search see seek seem sell send serve set settle share shake shop shout show shower
    shrug sigh sign sing sit skip slap sleep slip smell smile smirk snap sneeze sob
    solve speak spend spill splash spread stand stare start stay steal step stop stress
    stretch struggle study succeed suffer suggest supply support surprise swallow swear
    sweat sweep swim take talk taste teach tease tell text thank think throw tidy tip
    touch train travel treat tremble trip trust try turn type understand unpack update
    upset use vacuum value visit volunteer vote wait wake walk wander want warn wash
    watch wave wear weep welcome whine whisper win wink wipe wish wonder work worry
    wrap write yawn yell
    """.split()
)

ADJECTIVES = frozenset(
    """
    accomplished adventurous afraid aggressive agreeable amazed ambitious amused angry
    annoyed anxious appreciative ashamed attentive awful bad bitter bold bored brave
    busy calm capable careful careless caring celebratory charitable cheerful clean
    clever clumsy comfortable compassionate competitive concerned confident confused
    considerate content courageous cowardly creative cruel curious daring dedicated
    delighted delightful dependable depressed determined devoted diligent disappointed
    dishonest disgusted dirty eager ecstatic efficient embarrassed emotional energetic
    enthusiastic envious excited exhausted fair faithful fearful fearless foolish
    forgetful forgiving free friendly frightened frugal frustrated funny furious
    generous gentle giving glad good grateful greedy grumpy guilty happy hardworking
    hateful healthy helpful heroic honest hopeful horrified humble hungry hurt
    impatient impulsive independent industrious innocent inquisitive insecure inspired
    intelligent interested irresponsible irritated jealous joyful joyous kind lazy
    lonely loved loving loyal lucky mad mean melancholy merry messy miserable motivated
    naughty nervous nice nosy obedient optimistic organized outgoing overjoyed
    passionate patient peaceful persistent playful pleasant pleased polite prepared
    productive proud prudent punctual quiet reckless refreshed regretful relaxed
    relieved religious remorseful resourceful respectful responsible romantic rude sad
    safe satisfied scared selfish selfless sensible sentimental shy sick silly sincere
    skillful sleepy smart sneaky sociable social sore sorry stressed strong stubborn
    studious stupid successful supportive sweet sympathetic talented terrible thankful
    thirsty thoughtful thrifty tired trustworthy unhappy upset vengeful warm weak
    wealthy weary wise worried
    """.split()
)
