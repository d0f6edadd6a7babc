"""Classical overlap metrics and judge-based RAG metrics."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Protocol, Sequence

from sparse_rag.pipeline import Completion

_WORD = re.compile(r"\w+")
_SENTENCE_END = re.compile(r"[.?!]")

STOPWORDS = frozenset(
    """a an and are as at be been but by can could did do does for from had has have he her his how i
    if in into is it its me my no not of on or our she so than that the their them then there these
    they this to us was we were what when where which who whom why will with would you your""".split()
)

# Report rows, in display order.
METRICS = (
    ("precision", "Precision"),
    ("recall", "Recall"),
    ("f_score", "F-Score"),
    ("meteor", "METEOR"),
    ("contextual_recall", "Contextual Recall"),
    ("contextual_precision", "Contextual Precision"),
    ("contextual_relevancy", "Contextual Relevancy"),
    ("answer_relevancy", "Answer Relevancy"),
    ("faithfulness", "Faithfulness"),
)


def tokens(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def split_statements(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_END.split(text) if s.strip()]


def token_prf(candidate: str, reference: str) -> tuple[float, float, float]:
    """Precision, recall and F1 of the multiset token overlap."""
    cand, ref = tokens(candidate), tokens(reference)
    if not cand or not ref:
        return 0.0, 0.0, 0.0
    common = sum((Counter(cand) & Counter(ref)).values())
    p = common / len(cand)
    r = common / len(ref)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def meteor_exact(candidate: str, reference: str) -> float:
    """METEOR restricted to exact unigram matches.

    Each candidate token, left to right, aligns to the first unused equal
    reference token. A chunk is a maximal run of matches adjacent in both the
    candidate and the reference.
    """
    cand, ref = tokens(candidate), tokens(reference)
    used = [False] * len(ref)
    alignment: list[tuple[int, int]] = []
    for i, tok in enumerate(cand):
        for j, other in enumerate(ref):
            if not used[j] and other == tok:
                used[j] = True
                alignment.append((i, j))
                break
    m = len(alignment)
    if m == 0:
        return 0.0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(alignment, alignment[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p = m / len(cand)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1 - penalty)


def contextual_precision(relevance_flags: Sequence[bool]) -> float:
    """Mean over relevant positions k_j of (relevant items so far) / k_j."""
    hits = 0
    total = 0.0
    for k, flag in enumerate(relevance_flags, start=1):
        if flag:
            hits += 1
            total += hits / k
    return total / hits if hits else 0.0


class Judge(Protocol):
    def split_statements(self, text: str) -> list[str]: ...

    def is_relevant(self, statement: str, query: str) -> bool: ...

    def is_attributable(self, claim: str, context: Sequence[str]) -> bool: ...


class RuleJudge:
    """Keyword-overlap judge for offline, deterministic evaluation."""

    def __init__(self, attribution_threshold: float = 0.6):
        self.attribution_threshold = attribution_threshold

    def split_statements(self, text: str) -> list[str]:
        return split_statements(text)

    def is_relevant(self, statement: str, query: str) -> bool:
        content = set(tokens(query)) - STOPWORDS
        return bool(content & set(tokens(statement)))

    def is_attributable(self, claim: str, context: Sequence[str]) -> bool:
        words = set(tokens(claim))
        if not words:
            return False
        return any(
            len(words & set(tokens(chunk))) / len(words) >= self.attribution_threshold for chunk in context
        )


class LLMJudge:
    """Judge asking a completion backend yes/no questions; statement splitting stays rule-based."""

    def __init__(self, llm: Completion):
        self.llm = llm

    def split_statements(self, text: str) -> list[str]:
        return split_statements(text)

    def _yes(self, prompt: str) -> bool:
        return self.llm.complete(prompt).strip().lower().startswith("yes")

    def is_relevant(self, statement: str, query: str) -> bool:
        return self._yes(
            f"Is the following statement relevant to the question? Reply yes or no.\n"
            f"Question: {query}\nStatement: {statement}\nReply:"
        )

    def is_attributable(self, claim: str, context: Sequence[str]) -> bool:
        joined = "\n\n".join(context)
        return self._yes(
            f"Can the claim be inferred from the context? Reply yes or no.\n"
            f"Context:\n{joined}\nClaim: {claim}\nReply:"
        )


def _fraction(flags: Sequence[bool]) -> float:
    return sum(flags) / len(flags) if flags else 0.0


def contextual_recall(claims: Sequence[str], context: Sequence[str], judge: Judge) -> float:
    return _fraction([judge.is_attributable(c, context) for c in claims])


def contextual_relevancy(context_statements: Sequence[str], query: str, judge: Judge) -> float:
    return _fraction([judge.is_relevant(s, query) for s in context_statements])


def answer_relevancy(answer_statements: Sequence[str], query: str, judge: Judge) -> float:
    return _fraction([judge.is_relevant(s, query) for s in answer_statements])


def faithfulness(answer_claims: Sequence[str], context: Sequence[str], judge: Judge) -> float:
    return _fraction([judge.is_attributable(c, context) for c in answer_claims])


@dataclass(frozen=True)
class EvalCase:
    query: str
    ground_truth: str
    retrieved_context: list[str]
    actual_output: str

    @classmethod
    def from_dict(cls, data: dict) -> "EvalCase":
        return cls(
            query=data["query"],
            ground_truth=data["ground_truth"],
            retrieved_context=list(data["retrieved_context"]),
            actual_output=data["actual_output"],
        )


@dataclass
class EvalReport:
    per_case: list[dict[str, float]]
    aggregate: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"per_case": self.per_case, "aggregate": self.aggregate}

    def table(self) -> str:
        width = max(len(label) for _, label in METRICS)
        lines = [f"{'Metric':<{width}}  Value", "-" * (width + 8)]
        lines += [f"{label:<{width}}  {self.aggregate[key]:.4f}" for key, label in METRICS]
        return "\n".join(lines)


def score_case(case: EvalCase, judge: Judge) -> dict[str, float]:
    p, r, f = token_prf(case.actual_output, case.ground_truth)
    context_statements = [s for chunk in case.retrieved_context for s in judge.split_statements(chunk)]
    answer_statements = judge.split_statements(case.actual_output)
    return {
        "precision": p,
        "recall": r,
        "f_score": f,
        "meteor": meteor_exact(case.actual_output, case.ground_truth),
        "contextual_recall": contextual_recall(
            judge.split_statements(case.ground_truth), case.retrieved_context, judge
        ),
        "contextual_precision": contextual_precision(
            [judge.is_relevant(chunk, case.query) for chunk in case.retrieved_context]
        ),
        "contextual_relevancy": contextual_relevancy(context_statements, case.query, judge),
        "answer_relevancy": answer_relevancy(answer_statements, case.query, judge),
        "faithfulness": faithfulness(answer_statements, case.retrieved_context, judge),
    }


def evaluate(dataset: Sequence[EvalCase], judge: Judge) -> EvalReport:
    if not dataset:
        raise ValueError("empty dataset")
    per_case = [score_case(case, judge) for case in dataset]
    aggregate = {key: fmean(row[key] for row in per_case) for key, _ in METRICS}
    return EvalReport(per_case=per_case, aggregate=aggregate)


def load_cases(path: str | Path) -> list[EvalCase]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [EvalCase.from_dict(item) for item in data]
