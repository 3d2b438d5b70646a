"""Survey ingestion: CSV parsing, polarity inversion and normalized instrument scores.

Raw files carry one row per participant::

    participant_id,sex,age,cohort,PSS_q1,...,PSS_q10,JSS_q1,...

``sex`` is ``F`` or ``M``, ``cohort`` is ``pilot`` or ``nonpilot`` and an
empty cell marks a skipped question.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

INSTRUMENTS = ("PSS", "JSS", "MFI", "GF", "PF", "RA", "RM", "MF")

_SEX_CODES = {"F": "female", "M": "male"}
_COHORT_CODES = {"pilot": "pilot", "nonpilot": "non_pilot"}


class SurveyParseError(ValueError):
    """Structural problem in a survey file (bad header, wrong column count)."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)


class SurveyValidationError(ValueError):
    """A well-formed cell holds a value the instrument does not allow."""


@dataclass(frozen=True)
class InstrumentSpec:
    name: str
    question_count: int
    max_value: int
    min_value: int = 0
    inverted_items: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "inverted_items", frozenset(self.inverted_items))
        if self.question_count < 1:
            raise ValueError(f"{self.name}: question_count must be >= 1")
        if not (self.max_value > self.min_value >= 0):
            raise ValueError(f"{self.name}: need max_value > min_value >= 0")
        bad = [k for k in self.inverted_items if not 1 <= k <= self.question_count]
        if bad:
            raise ValueError(f"{self.name}: inverted items out of range: {sorted(bad)}")

    def columns(self) -> list[str]:
        return [f"{self.name}_q{k}" for k in range(1, self.question_count + 1)]

    @classmethod
    def from_dict(cls, d: dict) -> "InstrumentSpec":
        return cls(
            name=d["name"],
            question_count=int(d["question_count"]),
            max_value=int(d["max_value"]),
            min_value=int(d.get("min_value", 0)),
            inverted_items=frozenset(int(k) for k in d.get("inverted_items", ())),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "question_count": self.question_count,
            "min_value": self.min_value,
            "max_value": self.max_value,
            "inverted_items": sorted(self.inverted_items),
        }


@dataclass(frozen=True)
class SurveyResponse:
    participant_id: str
    sex: str
    age: int
    answers: dict[str, tuple[int | None, ...]]
    cohort: str


def default_instruments() -> list[InstrumentSpec]:
    """Illustrative instrument layout; override through the config file.

    Item counts and reversed items follow the published PSS-10 and MFI-20
    forms. The five MFI subscales are stored as separate 4-item blocks.
    """
    specs = [
        InstrumentSpec("PSS", 10, max_value=4, min_value=0, inverted_items={4, 5, 7, 8}),
        InstrumentSpec("JSS", 4, max_value=5, min_value=0),
        InstrumentSpec(
            "MFI", 20, max_value=5, min_value=1,
            inverted_items={2, 5, 9, 10, 13, 14, 16, 17, 18, 19},
        ),
    ]
    specs += [InstrumentSpec(name, 4, max_value=5, min_value=1) for name in INSTRUMENTS[3:]]
    return specs


def parse_responses(source: IO[bytes] | IO[str] | bytes | str,
                    specs: Sequence[InstrumentSpec]) -> list[SurveyResponse]:
    """Parse a raw survey CSV into :class:`SurveyResponse` objects.

    ``source`` may be a byte or text stream, raw bytes, or a string holding
    the CSV text. Row numbers in errors count the header as row 1.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SurveyParseError("empty file") from None

    required = ["participant_id", "sex", "age", "cohort"]
    for spec in specs:
        required += spec.columns()
    missing = [c for c in required if c not in header]
    if missing:
        raise SurveyParseError(f"missing columns: {', '.join(missing)}", row=1)
    pos = {name: i for i, name in enumerate(header)}

    out = []
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SurveyParseError(
                f"expected {len(header)} columns, got {len(row)}", row=rownum)
        cell = lambda name: row[pos[name]].strip()  # noqa: E731
        pid = cell("participant_id")
        sex = _SEX_CODES.get(cell("sex").upper())
        if sex is None:
            raise SurveyValidationError(f"participant {pid}: sex must be F or M, got {cell('sex')!r}")
        cohort = _COHORT_CODES.get(cell("cohort").lower())
        if cohort is None:
            raise SurveyValidationError(
                f"participant {pid}: cohort must be pilot or nonpilot, got {cell('cohort')!r}")
        try:
            age = int(cell("age"))
        except ValueError:
            raise SurveyParseError(f"participant {pid}: bad age {cell('age')!r}", row=rownum) from None

        answers = {}
        for spec in specs:
            values = []
            for k, col in enumerate(spec.columns(), start=1):
                v = cell(col)
                if v == "":
                    values.append(None)
                    continue
                try:
                    a = int(v)
                except ValueError:
                    raise SurveyParseError(
                        f"participant {pid}: non-integer answer {v!r} in {col}", row=rownum) from None
                if not spec.min_value <= a <= spec.max_value:
                    raise SurveyValidationError(
                        f"participant {pid}, instrument {spec.name}, question {k}: "
                        f"answer {a} outside [{spec.min_value}, {spec.max_value}]")
                values.append(a)
            answers[spec.name] = tuple(values)
        out.append(SurveyResponse(pid, sex, age, answers, cohort))
    return out


def apply_inversion(answer: int, spec: InstrumentSpec) -> int:
    """Reflect ``answer`` about the centre of the instrument's scale."""
    if not spec.min_value <= answer <= spec.max_value:
        raise ValueError(f"{spec.name}: answer {answer} outside scale")
    return spec.max_value + spec.min_value - answer


def filter_complete(responses: Iterable[SurveyResponse]) -> list[SurveyResponse]:
    """Drop participants who skipped every question of at least one instrument."""
    return [
        r for r in responses
        if all(any(a is not None for a in ans) for ans in r.answers.values())
    ]


def aggregate_score(answers: Sequence[int | None], spec: InstrumentSpec) -> float:
    """Normalized aggregate ``sum(r_i) / (n * m)`` with inverted items reflected.

    Skipped answers add nothing to the sum but still count in ``n``.
    """
    if len(answers) != spec.question_count:
        raise ValueError(
            f"{spec.name}: expected {spec.question_count} answers, got {len(answers)}")
    if all(a is None for a in answers):
        raise ValueError(f"{spec.name}: every answer absent; filter the participant first")
    total = 0
    for k, a in enumerate(answers, start=1):
        if a is None:
            continue
        total += apply_inversion(a, spec) if k in spec.inverted_items else a
    return total / (spec.question_count * spec.max_value)


def score_responses(responses: Iterable[SurveyResponse],
                    specs: Sequence[InstrumentSpec]):
    """Filter incomplete participants and build a scored :class:`~pilotfair.dataset.Dataset`."""
    from .dataset import FeatureRow, Dataset

    by_name = {s.name: s for s in specs}
    missing = [name for name in INSTRUMENTS if name not in by_name]
    if missing:
        raise ValueError(f"no instrument spec for {', '.join(missing)}")
    rows = []
    for r in filter_complete(responses):
        scores = tuple(aggregate_score(r.answers[name], by_name[name]) for name in INSTRUMENTS)
        label = 1 if r.cohort == "pilot" else 0
        rows.append(FeatureRow(sex=r.sex, age=r.age, scores=scores, label=label))
    return Dataset.from_rows(rows)
