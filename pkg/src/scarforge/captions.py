"""Clinical-style caption synthesis and the fixed zero-shot query strings.

Positive captions follow a single invertible template with a rotating
enhancement synonym; negative captions reuse the negative query sentence.
Every caption ends with the slice-location sentence so patient-level text can
be tied to a specific short-axis position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .anatomy import Extent, ScarSpec, SliceLevel, WallLocation, wall_location_tokens
from .errors import CaptionParseError
from .rng import SplitMix64

ENHANCEMENT_SYNONYMS = (
    "delayed enhancement",
    "delayed hyperenhancement",
    "late enhancement",
    "scar",
    "infarct",
)

POSITIVE_QUERY = "there is hyperenhancement in the myocardium"
NEGATIVE_QUERY = "there is no hyperenhancement in the myocardium"


@dataclass(frozen=True)
class Caption:
    text: str
    label: str                      # "positive" | "negative"
    level: SliceLevel
    spec: ScarSpec | None = None    # present iff positive

    def __post_init__(self):
        if self.label not in ("positive", "negative"):
            raise ValueError(f"unknown caption label {self.label!r}")
        if (self.label == "positive") != (self.spec is not None):
            raise ValueError("positive captions carry a spec; negative captions do not")


def slice_suffix(level: SliceLevel) -> str:
    return f"This image is from {level.value} level."


def with_slice_suffix(sentence: str, level: SliceLevel) -> str:
    """Append the slice-location sentence to a query before encoding."""
    return f"{sentence}. {slice_suffix(level)}"


def inference_queries() -> tuple[str, str]:
    """The two fixed class-description sentences (positive, negative)."""
    return POSITIVE_QUERY, NEGATIVE_QUERY


def generate_positive_caption(spec: ScarSpec, rng: SplitMix64) -> Caption:
    """Fill the positive template; the enhancement noun is drawn uniformly
    from the synonym set (one draw)."""
    noun = rng.choice(ENHANCEMENT_SYNONYMS)
    text = (f"there is {spec.extent.value} {noun} in {spec.location.text} wall. "
            f"{slice_suffix(spec.level)}")
    return Caption(text=text, label="positive", level=spec.level, spec=spec)


def generate_negative_caption(level: SliceLevel, rng: SplitMix64 | None = None) -> Caption:
    """Negative-class caption; consumes no random draws."""
    text = with_slice_suffix(NEGATIVE_QUERY, level)
    return Caption(text=text, label="negative", level=level)


def _alts(words) -> str:
    return "|".join(re.escape(w) for w in words)


_POSITIVE_RE = re.compile(
    rf"there is ({_alts(e.value for e in Extent)}) "
    rf"({_alts(ENHANCEMENT_SYNONYMS)}) "
    rf"in ({_alts(wall_location_tokens())}) wall\. "
    rf"This image is from ({_alts(l.value for l in SliceLevel)}) level\."
)
_NEGATIVE_RE = re.compile(
    rf"{re.escape(NEGATIVE_QUERY)}\. "
    rf"This image is from ({_alts(l.value for l in SliceLevel)}) level\."
)

_FULL_LANGUAGE: tuple[str, ...] | None = None


def _full_language() -> tuple[str, ...]:
    # the grammar is finite; enumerate it once for parse-error positions
    global _FULL_LANGUAGE
    if _FULL_LANGUAGE is None:
        sentences = []
        for level in SliceLevel:
            sentences.append(generate_negative_caption(level).text)
            for extent in Extent:
                for token in wall_location_tokens():
                    for noun in ENHANCEMENT_SYNONYMS:
                        sentences.append(
                            f"there is {extent.value} {noun} in {token} wall. "
                            f"{slice_suffix(level)}")
        _FULL_LANGUAGE = tuple(sentences)
    return _FULL_LANGUAGE


def _divergence_position(text: str) -> int:
    best = 0
    for candidate in _full_language():
        n = min(len(text), len(candidate))
        i = 0
        while i < n and text[i] == candidate[i]:
            i += 1
        best = max(best, i)
    return best


def parse_caption(text: str) -> Caption:
    """Invert the caption grammar.

    Returns a positive Caption with the recovered spec, or a negative Caption
    for the negative form. Anything else raises CaptionParseError with the
    position where the text leaves the grammar.
    """
    m = _POSITIVE_RE.fullmatch(text)
    if m:
        extent = Extent(m.group(1))
        location = WallLocation.from_text(m.group(3))
        level = SliceLevel(m.group(4))
        return Caption(text=text, label="positive", level=level,
                       spec=ScarSpec(location, extent, level))
    m = _NEGATIVE_RE.fullmatch(text)
    if m:
        return Caption(text=text, label="negative", level=SliceLevel(m.group(1)))
    pos = _divergence_position(text)
    raise CaptionParseError(text, pos, "text does not match the caption grammar")
