"""Evaluation metrics: correctness recall/precision, citation recall and
precision, and retrieval-calibrated correctness.

The citation metrics are exact duals of the reward signs: citation recall is
the percentage of sentences whose recall reward would be positive, citation
precision the percentage of citations whose precision reward would be
positive. Correctness metrics reuse the same hit count the correctness
reward is built on.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .core import (
    DatasetMode,
    KeyInfoKind,
    KeyInfoList,
    ParsedResponse,
    TaskExample,
    strip_citations,
)
from .oracle import EntailmentOracle, em_contains, render_passage
from .rewards import citation_precision_rewards, citation_recall_rewards, count_hits

# unit weight for sign counting; actual reward weights only scale magnitudes
_UNIT = 1.0


@dataclass(frozen=True)
class MetricCounts:
    """Raw counts behind the percentages.

    t_pred is the number of predicted list items (list-form only);
    l2_supported / l3_relevant count sentences and citations whose rewards
    would be positive.
    """

    h: int
    t: int
    t_pred: int | None
    l2: int
    l2_supported: int
    l3: int
    l3_relevant: int


@dataclass(frozen=True)
class CalibratedCorrectness:
    """Correctness recomputed against only the key items actually present
    in the retrieved passages."""

    doc_recall: float
    key_count: int
    correctness_recall: float
    correctness_recall_5: float | None
    correctness_precision: float | None
    vacuous: bool


@dataclass(frozen=True)
class MetricReport:
    example_id: str
    correctness_recall: float
    correctness_recall_5: float | None
    correctness_precision: float | None
    citation_recall: float
    citation_precision: float
    counts: MetricCounts
    vacuous_correctness: bool
    vacuous_citations: bool
    calibrated: CalibratedCorrectness | None = None

    def to_record(self) -> dict:
        """Flat dict with the report-file field names (full precision)."""
        record = {
            "example_id": self.example_id,
            "correctness_recall": self.correctness_recall,
            "correctness_recall_5": self.correctness_recall_5,
            "correctness_precision": self.correctness_precision,
            "citation_recall": self.citation_recall,
            "citation_precision": self.citation_precision,
            "counts": {
                "h": self.counts.h,
                "t": self.counts.t,
                "t_pred": self.counts.t_pred,
                "l2": self.counts.l2,
                "l2_supported": self.counts.l2_supported,
                "l3": self.counts.l3,
                "l3_relevant": self.counts.l3_relevant,
            },
            "vacuous_correctness": self.vacuous_correctness,
            "vacuous_citations": self.vacuous_citations,
            "calibrated": None,
        }
        if self.calibrated is not None:
            record["calibrated"] = {
                "doc_recall": self.calibrated.doc_recall,
                "key_count": self.calibrated.key_count,
                "correctness_recall": self.calibrated.correctness_recall,
                "correctness_recall_5": self.calibrated.correctness_recall_5,
                "correctness_precision": self.calibrated.correctness_precision,
                "vacuous": self.calibrated.vacuous,
            }
        return record


def _correctness_fields(
    parsed: ParsedResponse,
    example: TaskExample,
    key_info: KeyInfoList,
    oracle: EntailmentOracle | None,
    strict_em: bool,
) -> tuple[float, float | None, float | None, int, int | None, bool]:
    """(recall, rec5, precision, h, t_pred, vacuous) for a given key list."""
    t = key_info.count
    list_form = example.dataset_mode is DatasetMode.LIST_FORM
    t_pred = parsed.sentence_count if list_form else None
    if t == 0:
        # no keys to capture: vacuously perfect, excluded from aggregates
        return 100.0, (100.0 if list_form else None), (0.0 if list_form else None), 0, t_pred, True
    h = count_hits(strip_citations(parsed.full_text), key_info, oracle, strict_em)
    recall = 100.0 * h / t
    rec5 = None
    precision = None
    if list_form:
        rec5 = 100.0 * min(h, 5) / min(t, 5)
        precision = 100.0 * h / t_pred if t_pred else 0.0
    return recall, rec5, precision, h, t_pred, False


def calibrate_correctness(
    example: TaskExample,
    oracle: EntailmentOracle | None = None,
    strict_em: bool = False,
) -> tuple[KeyInfoList, float]:
    """Filter the key list down to items recoverable from the retrieved
    passages, and report the passages' own recall of the key list.

    Exact-match items must appear as substrings of the concatenated
    passages; claims must be entailed by them.
    """
    rendered = " ".join(render_passage(p) for p in example.passages)
    info = example.key_info
    if info.kind is KeyInfoKind.EXACT_MATCH:
        kept = tuple(i for i in info.items if em_contains(rendered, i, strict=strict_em))
    else:
        if oracle is None:
            raise ValueError("claims-mode calibration requires an entailment oracle")
        kept = tuple(i for i in info.items if oracle.entails(rendered, i))
    doc_recall = 100.0 * len(kept) / info.count if info.count else 100.0
    return KeyInfoList(info.kind, kept), doc_recall


def correctness_metrics(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle | None = None,
    strict_em: bool = False,
) -> tuple[float, float | None, float | None, int, int | None, bool]:
    """Correctness recall (plus, for list-form, recall-5 and precision).

    Recall is 100*h/t. Recall-5 clips both sides at five, so capturing five
    correct list answers scores 100 regardless of how long the gold list
    is. Precision is 100*h over the number of predicted items.
    """
    return _correctness_fields(parsed, example, example.key_info, oracle, strict_em)


def citation_metrics(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle,
) -> tuple[float, float, int, int, bool]:
    """(citation_recall, citation_precision, l2_supported, l3_relevant,
    vacuous) for one response.

    A response with sentences but no citations scores 0 precision: an
    uncited answer is maximally penalized, not vacuously perfect. A response
    with no scorable sentences at all is flagged vacuous.
    """
    l2 = parsed.sentence_count
    l3 = parsed.citation_count
    if l2 == 0:
        return 0.0, 0.0, 0, 0, True
    r2 = citation_recall_rewards(parsed, example, oracle, _UNIT)
    l2_supported = sum(1 for v in r2 if v > 0)
    recall = 100.0 * l2_supported / l2
    if l3 == 0:
        return recall, 0.0, l2_supported, 0, False
    r3 = citation_precision_rewards(parsed, example, oracle, _UNIT)
    l3_relevant = sum(1 for r in r3 if r.value > 0)
    precision = 100.0 * l3_relevant / l3
    return recall, precision, l2_supported, l3_relevant, False


def evaluate_example(
    parsed: ParsedResponse,
    example: TaskExample,
    oracle: EntailmentOracle,
    strict_em: bool = False,
    calibrate: bool = False,
) -> MetricReport:
    """Full metric report for one (example, response) pair."""
    recall, rec5, precision, h, t_pred, vac_corr = correctness_metrics(
        parsed, example, oracle, strict_em
    )
    cit_recall, cit_precision, l2s, l3r, vac_cit = citation_metrics(
        parsed, example, oracle
    )
    calibrated = None
    if calibrate:
        filtered, doc_recall = calibrate_correctness(example, oracle, strict_em)
        c_recall, c_rec5, c_precision, _, _, c_vac = _correctness_fields(
            parsed, example, filtered, oracle, strict_em
        )
        calibrated = CalibratedCorrectness(
            doc_recall=doc_recall,
            key_count=filtered.count,
            correctness_recall=c_recall,
            correctness_recall_5=c_rec5,
            correctness_precision=c_precision,
            vacuous=c_vac,
        )
    return MetricReport(
        example_id=example.example_id,
        correctness_recall=recall,
        correctness_recall_5=rec5,
        correctness_precision=precision,
        citation_recall=cit_recall,
        citation_precision=cit_precision,
        counts=MetricCounts(
            h=h,
            t=example.key_info.count,
            t_pred=t_pred,
            l2=parsed.sentence_count,
            l2_supported=l2s,
            l3=parsed.citation_count,
            l3_relevant=l3r,
        ),
        vacuous_correctness=vac_corr,
        vacuous_citations=vac_cit,
        calibrated=calibrated,
    )


def aggregate_reports(reports: list[MetricReport]) -> dict:
    """Unweighted per-example means; vacuous examples are excluded from the
    affected metric only. Returns a plain dict ready for serialization."""

    def _mean(values: list[float]) -> tuple[float | None, int]:
        return (fmean(values) if values else None), len(values)

    corr = [r.correctness_recall for r in reports if not r.vacuous_correctness]
    rec5 = [
        r.correctness_recall_5
        for r in reports
        if r.correctness_recall_5 is not None and not r.vacuous_correctness
    ]
    prec = [
        r.correctness_precision
        for r in reports
        if r.correctness_precision is not None and not r.vacuous_correctness
    ]
    cit_rec = [r.citation_recall for r in reports if not r.vacuous_citations]
    cit_prec = [r.citation_precision for r in reports if not r.vacuous_citations]

    out: dict = {"examples": len(reports)}
    for name, values in (
        ("correctness_recall", corr),
        ("correctness_recall_5", rec5),
        ("correctness_precision", prec),
        ("citation_recall", cit_rec),
        ("citation_precision", cit_prec),
    ):
        mean, contributors = _mean(values)
        out[name] = mean
        out[f"{name}_contributors"] = contributors

    calibrated = [r.calibrated for r in reports if r.calibrated is not None]
    if calibrated:
        doc_recall = [c.doc_recall for c in calibrated]
        cal_recall = [c.correctness_recall for c in calibrated if not c.vacuous]
        out["calibrated"] = {
            "doc_recall": fmean(doc_recall),
            "correctness_recall": fmean(cal_recall) if cal_recall else None,
            "correctness_recall_contributors": len(cal_recall),
        }
    return out
