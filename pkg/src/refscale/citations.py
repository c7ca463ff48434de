"""Citation splitting, APA field parsing, and the normalization utilities
shared by deduplication and title matching.

All functions here are pure and deterministic. Parsing is rule-based: a
reference either parses or raises :class:`ParseFailure`, so failures are
countable rather than silently absorbed.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, List, Optional, Set

__all__ = [
    "ParsedReference",
    "ParseFailure",
    "split_reference_list",
    "parse_apa",
    "normalize_title",
    "content_words",
    "content_word_overlap",
    "load_stopwords",
    "surname_of",
]


@dataclass
class ParsedReference:
    """One scholarly citation with the five scored fields."""

    authors: List[str]
    year: Optional[int]
    title: str
    venue: Optional[str]
    identifier: Optional[str]
    raw: str

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("title must be non-empty")
        if self.year is not None and not (1400 <= self.year <= 2100):
            raise ValueError(f"implausible year: {self.year}")


class ParseFailure(ValueError):
    """Raised when no title can be extracted; carries the raw string."""

    def __init__(self, raw: str, reason: str):
        super().__init__(f"unparseable citation ({reason}): {raw!r}")
        self.raw = raw
        self.reason = reason


# Leading enumeration markers: "1.", "1)", "[1]", "-", "*", "•"
_MARKER_RE = re.compile(r"^\s*(?:\[\d+\]|\d+[\.\)]|[-*•·])\s*")
_YEAR_RE = re.compile(r"\((?:[^()]*?)?((?:1[4-9]|20)\d{2})[a-z]?(?:[^()]*?)?\)")
_DOI_URL_RE = re.compile(
    r"(?:https?://\S+|doi:\s*\S+|10\.\d{4,9}/\S+)", re.IGNORECASE
)


def split_reference_list(raw_text: str) -> List[str]:
    """Split a model's raw response into candidate citation strings.

    Lines are the unit of splitting; enumeration markers are stripped and
    prose lines that carry no parenthesized year (preambles such as
    "Here are the references:") are dropped. An empty result is a valid
    outcome (refusal cells).
    """
    entries: List[str] = []
    for line in raw_text.splitlines():
        stripped = _MARKER_RE.sub("", line.strip())
        if not stripped:
            continue
        # Commentary heuristic: a citation must contain a parenthesized year.
        if not _YEAR_RE.search(stripped):
            continue
        entries.append(stripped)
    return entries


def parse_apa(raw: str) -> ParsedReference:
    """Parse a single APA-style citation: Author(s) (Year). Title. Venue.

    Field extraction is positional: authors are the text before the first
    parenthesized year, the title is the sentence after the year up to the
    next period, the venue is the remainder. The identifier is the first
    DOI- or URL-shaped token anywhere in the string.
    """
    if not raw or not raw.strip():
        raise ParseFailure(raw, "empty input")
    text = raw.strip()

    identifier = None
    id_match = _DOI_URL_RE.search(text)
    if id_match:
        identifier = id_match.group(0).rstrip(".,;")

    year_match = _YEAR_RE.search(text)
    if year_match is None:
        raise ParseFailure(raw, "no parenthesized year")
    year = int(year_match.group(1))

    author_text = text[: year_match.start()].strip().rstrip(",")
    if not author_text:
        raise ParseFailure(raw, "no author text before year")
    authors = _split_authors(author_text)

    rest = text[year_match.end() :].lstrip(" .")
    # Strip the identifier tail before carving title/venue.
    if id_match and id_match.start() >= year_match.end():
        rest = text[year_match.end() : id_match.start()].lstrip(" .")
    title, _, venue = _split_title_venue(rest)
    if not title:
        raise ParseFailure(raw, "no title after year")
    return ParsedReference(
        authors=authors,
        year=year,
        title=title,
        venue=venue if venue else None,
        identifier=identifier,
        raw=raw,
    )


def _split_authors(author_text: str) -> List[str]:
    """Split an APA author block into individual author strings.

    APA separates authors with ", " between "Surname, I." units and an
    ampersand/"and" before the last. We re-pair surname/initial fragments.
    """
    # Normalize the final-author conjunction to a plain separator, then pair
    # each "Surname" with its following initials fragments.
    text = re.sub(r",?\s*(?:&|and)\s+", "; ", author_text)
    authors: List[str] = []
    for chunk in text.split(";"):
        chunk = chunk.strip().rstrip(",")
        if chunk:
            authors.extend(_pair_author_fragments(chunk))
    return authors


def _pair_author_fragments(chunk: str) -> List[str]:
    frags = [f.strip() for f in chunk.split(",") if f.strip()]
    authors: List[str] = []
    current = ""
    for frag in frags:
        if current and _looks_like_initials(frag):
            current = f"{current}, {frag}"
        else:
            if current:
                authors.append(current)
            current = frag
    if current:
        authors.append(current)
    return authors


def _looks_like_initials(fragment: str) -> bool:
    return bool(re.fullmatch(r"(?:[A-Z]\.?\s*)+(?:Jr\.?|Sr\.?|III)?", fragment))


def _split_title_venue(rest: str):
    """Split "Title. Venue." on the first period that ends the title.

    Periods inside initials or common abbreviations do not terminate the
    title; we take the first ". " (or final period) outside parentheses.
    """
    rest = rest.strip()
    depth = 0
    for i, ch in enumerate(rest):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == "." and depth == 0:
            nxt = rest[i + 1 : i + 2]
            if nxt == "" or nxt == " ":
                # Guard against "U.S." style abbreviations mid-title.
                prev = rest[max(0, i - 2) : i]
                if re.fullmatch(r".[A-Z]", prev) and nxt == " ":
                    continue
                title = rest[:i].strip()
                venue = rest[i + 1 :].strip().rstrip(".")
                return title, ".", venue
    return rest.rstrip("."), "", ""


def normalize_title(s: str) -> str:
    """Case-fold, strip diacritics, and drop everything that is not a
    letter or digit. Idempotent and length-non-increasing."""
    folded = unicodedata.normalize("NFKD", s).casefold()
    return "".join(
        ch for ch in folded if not unicodedata.combining(ch) and ch.isalnum()
    )


def load_stopwords() -> Set[str]:
    """The fixed English function-word list shipped with the package."""
    text = resources.files("refscale.data").joinpath("stopwords.txt").read_text()
    return {line.strip() for line in text.splitlines() if line.strip()}


def content_words(s: str, stopwords: Set[str]) -> Set[str]:
    """Normalized non-stopword token set of a title."""
    tokens = re.findall(r"[^\W_]+", s, re.UNICODE)
    normed = (normalize_title(t) for t in tokens)
    return {t for t in normed if t and t not in stopwords}


def content_word_overlap(a: str, b: str, stopwords: Set[str]) -> float:
    """Fraction of the claimed title's content words found in the candidate.

    The denominator is the claimed title's word set (``a``): the quantity
    under verification. Returns 0.0 when the claimed title has no content
    words.
    """
    wa = content_words(a, stopwords)
    if not wa:
        return 0.0
    wb = content_words(b, stopwords)
    return len(wa & wb) / len(wa)


def surname_of(author: str) -> str:
    """Surname for comparison: the token before the first comma, else the
    last whitespace token."""
    author = author.strip()
    if "," in author:
        return author.split(",", 1)[0].strip()
    parts = author.split()
    return parts[-1] if parts else ""
