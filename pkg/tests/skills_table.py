"""Frozen ground-truth transcription of the deployed skill repertoire.

Each row: (scenario, skill name, start pattern, end transition, arm).
Atoms are spelled exactly as scenario files spell them.  The fidelity
tests compare the shipped scenario files against this table verbatim;
edit only if the repertoire itself is meant to change.
"""

# (scenario, name, (start_left, start_right), (end_left, end_right), arm)
REFERENCE_SKILLS = [
    ("dining", "Pick Can", ("any", "empty"), ("-", "can"), "right"),
    ("dining", "Place Can", ("any", "can"), ("-", "empty"), "right"),
    ("dining", "Get Plate from Human", ("empty", "any"), ("plate", "-"), "left"),
    ("dining", "Place Plate to Stack", ("plate", "any"), ("empty", "-"), "left"),
    ("dining", "Pick Plate from Table", ("empty", "empty"), ("empty", "plate"), "dual"),
    ("dining", "Handover Plate", ("plate", "any"), ("empty", "-"), "left"),
    ("dining", "Pick Sponge", ("any", "empty"), ("-", "sponge"), "right"),
    ("dining", "Brush with Sponge", ("plate", "sponge"), ("-", "-"), "dual"),
    ("dining", "Place Sponge", ("any", "sponge"), ("-", "empty"), "right"),
    ("dining", "Pick a Piece of Tissue", ("empty", "any"), ("-", "-"), "left"),
    ("office", "Settle Cap", ("any", "empty"), ("-", "-"), "right"),
    ("office", "Handover Cap", ("any", "empty"), ("-", "-"), "right"),
    ("office", "Pick Book", ("empty", "any"), ("-", "-"), "left"),
    ("office", "Pick Stamp", ("any", "empty"), ("-", "stamp"), "right"),
    ("office", "Stamp the Paper", ("any", "stamp"), ("-", "-"), "right"),
    ("office", "Place Stamp", ("any", "stamp"), ("-", "empty"), "right"),
    ("office", "Turn off/on the Lamp", ("empty", "any"), ("-", "-"), "left"),
    ("dining", "Cheers", ("any", "can"), ("-", "-"), "dual"),
    ("dining", "Wave", ("any", "empty"), ("-", "-"), "dual"),
    ("dining", "Shake Hands", ("any", "empty"), ("-", "-"), "dual"),
    ("dining", "Take Photo", ("any", "empty"), ("-", "-"), "dual"),
    ("dining", "Thumb Up", ("empty", "empty"), ("-", "-"), "dual"),
    ("dining", "Spread out Hands", ("empty", "empty"), ("-", "-"), "dual"),
]

# Expressive gestures are motion skills; everything else above is manipulation.
MOTION_SKILLS = {
    "Cheers",
    "Wave",
    "Shake Hands",
    "Take Photo",
    "Thumb Up",
    "Spread out Hands",
}

# Directed rollback pairs: interrupting the key undoes it by running the value.
REVERSE_PAIRS = {
    "Pick Can": "Place Can",
    "Get Plate from Human": "Handover Plate",
    "Pick Sponge": "Place Sponge",
    "Settle Cap": "Handover Cap",
    "Pick Stamp": "Place Stamp",
}

# Motion skills also appear in the office scenario file (minus Cheers, whose
# start condition names an object the office has none of).
OFFICE_MOTION_SKILLS = MOTION_SKILLS - {"Cheers"}
