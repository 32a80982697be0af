"""Porter stemming algorithm, original 1980 formulation.

Implements the suffix-stripping algorithm exactly as published (Porter, M.,
"An algorithm for suffix stripping", Program 14(3), 1980), without the
revisions that later crept into common implementations: no minimum word
length guard, no irregular-form pool, step 1c keeps the plain
"stem contains a vowel" condition, step 2 uses ABLI -> ABLE (not BLI -> BLE)
and has no LOGI or FULLI rules, and the *o test has no special case for
two-letter words.

Within a step, the rule with the longest matching suffix is selected; if its
condition fails, no other rule in that step is tried.
"""

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # y is a consonant at the start of a word or after a vowel,
        # and a vowel after a consonant (TOY vs SYZYGY).
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences VC in [C](VC)^m[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        if _is_consonant(stem, i):
            if prev_vowel:
                m += 1
            prev_vowel = False
        else:
            prev_vowel = True
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(stem: str) -> bool:
    """Condition *o: stem ends consonant-vowel-consonant, last not w, x or y."""
    return (
        len(stem) >= 3
        and _is_consonant(stem, len(stem) - 3)
        and not _is_consonant(stem, len(stem) - 2)
        and _is_consonant(stem, len(stem) - 1)
        and stem[-1] not in ("w", "x", "y")
    )


def _longest_match(word, rules):
    """Apply the step's longest-suffix rule, or return word unchanged.

    ``rules`` is a sequence of (suffix, replacement, condition) with
    condition taking the stem left after removing the suffix; None means
    unconditional. Once a suffix matches, a failed condition ends the step.
    """
    for suffix, replacement, condition in rules:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if condition is None or condition(stem):
                return stem + replacement
            return word
    return word


def _m_gt_0(stem: str) -> bool:
    return _measure(stem) > 0


def _m_gt_1(stem: str) -> bool:
    return _measure(stem) > 1


_STEP2_RULES = [
    ("ational", "ate", _m_gt_0),
    ("ization", "ize", _m_gt_0),
    ("iveness", "ive", _m_gt_0),
    ("fulness", "ful", _m_gt_0),
    ("ousness", "ous", _m_gt_0),
    ("tional", "tion", _m_gt_0),
    ("biliti", "ble", _m_gt_0),
    ("ation", "ate", _m_gt_0),
    ("alism", "al", _m_gt_0),
    ("aliti", "al", _m_gt_0),
    ("iviti", "ive", _m_gt_0),
    ("entli", "ent", _m_gt_0),
    ("ousli", "ous", _m_gt_0),
    ("enci", "ence", _m_gt_0),
    ("anci", "ance", _m_gt_0),
    ("izer", "ize", _m_gt_0),
    ("abli", "able", _m_gt_0),
    ("alli", "al", _m_gt_0),
    ("ator", "ate", _m_gt_0),
    ("eli", "e", _m_gt_0),
]

_STEP3_RULES = [
    ("icate", "ic", _m_gt_0),
    ("ative", "", _m_gt_0),
    ("alize", "al", _m_gt_0),
    ("iciti", "ic", _m_gt_0),
    ("ical", "ic", _m_gt_0),
    ("ness", "", _m_gt_0),
    ("ful", "", _m_gt_0),
]

_STEP4_RULES = [
    ("ement", "", _m_gt_1),
    ("ance", "", _m_gt_1),
    ("ence", "", _m_gt_1),
    ("able", "", _m_gt_1),
    ("ible", "", _m_gt_1),
    ("ment", "", _m_gt_1),
    ("ion", "", lambda stem: _m_gt_1(stem) and stem[-1:] in ("s", "t")),
    ("ant", "", _m_gt_1),
    ("ent", "", _m_gt_1),
    ("ism", "", _m_gt_1),
    ("ate", "", _m_gt_1),
    ("iti", "", _m_gt_1),
    ("ous", "", _m_gt_1),
    ("ive", "", _m_gt_1),
    ("ize", "", _m_gt_1),
    ("al", "", _m_gt_1),
    ("er", "", _m_gt_1),
    ("ic", "", _m_gt_1),
    ("ou", "", _m_gt_1),
]


def _step1a(word: str) -> str:
    return _longest_match(
        word,
        [
            ("sses", "ss", None),
            ("ies", "i", None),
            ("ss", "ss", None),
            ("s", "", None),
        ],
    )


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        stem = word[:-3]
        return stem + "ee" if _measure(stem) > 0 else word
    if word.endswith("ed") and _contains_vowel(word[:-2]):
        word = word[:-2]
    elif word.endswith("ing") and _contains_vowel(word[:-3]):
        word = word[:-3]
    else:
        return word
    # Cleanup after a successful ED/ING removal.
    if word.endswith(("at", "bl", "iz")):
        return word + "e"
    if _ends_double_consonant(word) and word[-1] not in ("l", "s", "z"):
        return word[:-1]
    if _measure(word) == 1 and _ends_cvc(word):
        return word + "e"
    return word


def _step1c(word: str) -> str:
    if word.endswith("y") and _contains_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _step5a(word: str) -> str:
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
    return word


def _step5b(word: str) -> str:
    if word.endswith("ll") and _measure(word[:-1]) > 1:
        return word[:-1]
    return word


def stem(word: str) -> str:
    """Return the stem of ``word``.

    The input is expected to be lowercase; callers that may pass mixed case
    should lowercase first. Non-alphabetic characters are treated as
    consonants, so tokens containing digits pass through mostly unchanged.
    Note the published rules map the bare word "s" to the empty string.
    """
    word = _step1a(word)
    word = _step1b(word)
    word = _step1c(word)
    word = _longest_match(word, _STEP2_RULES)
    word = _longest_match(word, _STEP3_RULES)
    word = _longest_match(word, _STEP4_RULES)
    word = _step5a(word)
    word = _step5b(word)
    return word
