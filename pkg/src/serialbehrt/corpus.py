"""Assemble the mixed pretraining corpus and compute coverage diagnostics.

The corpus mixes scientific-style documents with serialized EHR paragraphs.
A per-document seeded draw tags each document train or heldout; the heldout
tag drives masked-LM validation only (patient-level generalization is handled
by the downstream grouped split, so document-level tagging is deliberate).

Coverage between two corpora is summarized over token types (whitespace
tokens, lowercased, punctuation stripped at the edges):

    jaccard = |A n B| / |A u B|          small when the corpora differ
    eta     = |A u B| / (|A| + |B|)      1.0 for disjoint sets, 0.5 for equal

eta cannot exceed 1 for sets; values near 1 mean the corpora contribute
mostly distinct vocabulary.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateId, EmptyCorpus
from .serialize import SerializedDocument


@dataclass
class CorpusStore:
    documents: list[SerializedDocument]
    split_tags: dict[str, str]  # doc_id -> "train" | "heldout"
    mix_ratio: float  # fraction of ehr documents

    def train_docs(self) -> list[SerializedDocument]:
        return [d for d in self.documents if self.split_tags[d.doc_id] == "train"]

    def heldout_docs(self) -> list[SerializedDocument]:
        return [d for d in self.documents if self.split_tags[d.doc_id] == "heldout"]


@dataclass(frozen=True)
class OverlapStats:
    jaccard: float
    eta: float
    size_a: int
    size_b: int
    size_union: int
    size_intersection: int

    def to_dict(self) -> dict:
        return {
            "jaccard": self.jaccard,
            "eta": self.eta,
            "size_a": self.size_a,
            "size_b": self.size_b,
            "size_union": self.size_union,
            "size_intersection": self.size_intersection,
        }


def mix_corpus(
    sci_docs: list[SerializedDocument],
    ehr_docs: list[SerializedDocument],
    heldout_fraction: float = 0.1,
    seed: int = 0,
) -> CorpusStore:
    """Combine both document lists and tag a seeded heldout subset."""
    if not 0 <= heldout_fraction < 1:
        raise EmptyCorpus(f"heldout_fraction must be in [0, 1), got {heldout_fraction}")
    documents = list(sci_docs) + list(ehr_docs)
    if not documents:
        raise EmptyCorpus("cannot mix two empty document lists")
    seen = set()
    for doc in documents:
        if doc.doc_id in seen:
            raise DuplicateId(f"doc_id {doc.doc_id!r} appears more than once")
        seen.add(doc.doc_id)
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.random(len(documents))
    split_tags = {
        doc.doc_id: ("heldout" if draw < heldout_fraction else "train")
        for doc, draw in zip(documents, draws)
    }
    mix_ratio = len(ehr_docs) / len(documents)
    return CorpusStore(documents, split_tags, mix_ratio)


def token_types(docs: list[SerializedDocument]) -> set[str]:
    """Distinct lowercased whitespace tokens with edge punctuation stripped."""
    types: set[str] = set()
    for doc in docs:
        for token in doc.text.lower().split():
            token = token.strip(string.punctuation)
            if token:
                types.add(token)
    return types


def corpus_overlap(
    docs_a: list[SerializedDocument], docs_b: list[SerializedDocument]
) -> OverlapStats:
    """Set-arithmetic coverage stats between two corpora; symmetric."""
    a = token_types(docs_a)
    b = token_types(docs_b)
    if not a or not b:
        raise EmptyCorpus("corpus_overlap requires nonempty token-type sets on both sides")
    intersection = len(a & b)
    union = len(a | b)
    return OverlapStats(
        jaccard=intersection / union,
        eta=union / (len(a) + len(b)),
        size_a=len(a),
        size_b=len(b),
        size_union=union,
        size_intersection=intersection,
    )


def write_jsonl(docs: list[SerializedDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            record = {"doc_id": doc.doc_id, "source": doc.source, "text": doc.text,
                      "patient_id": doc.patient_id}
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def read_jsonl(path: str) -> list[SerializedDocument]:
    docs = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            docs.append(
                SerializedDocument(
                    doc_id=record["doc_id"],
                    source=record["source"],
                    text=record["text"],
                    patient_id=record.get("patient_id"),
                )
            )
    return docs


def write_overlap_report(stats: OverlapStats, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(stats.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
