"""Synthetic corpus: ten single-chunk facts hidden among forty near-duplicate chunks."""

from __future__ import annotations

from dataclasses import dataclass

from sparse_rag.chunking import Chunk, HashingEmbedder, embed_chunks
from sparse_rag.dense import DenseIndex
from sparse_rag.lexical import build_lexical_index
from sparse_rag.partition import partition

# (chunk text, query, token the answer must contain)
SPARSE_FACTS = [
    ("Dlabs chief executive: Ananya Kapoor.", "dlabs chief executive", "kapoor"),
    ("Zephyr vault passphrase equals cobalt.", "zephyr vault passphrase", "cobalt"),
    ("Orchard lab fridge temperature stays minus eighteen.", "orchard lab fridge temperature", "eighteen"),
    ("Quasar grant deadline falls November ninth.", "quasar grant deadline", "november"),
    ("Harbor parking permit costs forty rupees.", "harbor parking permit cost", "rupees"),
    ("Nimbus cluster password rotates quarterly.", "nimbus cluster password", "quarterly"),
    ("Falcon mentor Rohit Verma handles fintech.", "falcon mentor", "verma"),
    ("Saffron cafeteria closes sharp midnight.", "saffron cafeteria closes", "midnight"),
    ("Granite auditorium seats exactly 420 guests.", "granite auditorium seats", "420"),
    ("Velvet helpdesk extension dial 5521.", "velvet helpdesk extension", "5521"),
]

# Ten topics, four near-identical variants each: every chunk has a close neighbour.
TOPICS = [
    ("incubator", "The incubator hosts weekly mentoring sessions for early stage founders on the main campus"),
    ("demo", "The demo day showcases selected startups in front of investors and corporate partners every spring"),
    ("funding", "The seed funding programme offers grants and convertible notes to promising student ventures"),
    ("workshop", "The design workshop teaches prototyping and user research methods to new teams"),
    ("library", "The library provides journals databases and quiet study rooms to all registered members"),
    ("hostel", "The hostel allocates rooms to visiting founders during the residential bootcamp weeks"),
    ("network", "The alumni network connects graduates with mentors recruiters and angel investors worldwide"),
    ("internship", "The internship portal lists summer openings at partner companies for enrolled students"),
    ("newsletter", "The monthly newsletter summarises ecosystem news upcoming events and application calls"),
    ("legal", "The legal clinic reviews incorporation documents and intellectual property filings for startups"),
]
VARIANT_WORDS = ["today", "again", "regularly", "too"]

# Two queries per topic, each sharing vocabulary with that topic only.
TOPIC_QUERIES = [
    ("weekly mentoring sessions for founders", "incubator"),
    ("incubator sessions campus", "incubator"),
    ("demo day investors", "demo"),
    ("startups showcases spring", "demo"),
    ("seed funding grants", "funding"),
    ("convertible notes ventures", "funding"),
    ("design workshop prototyping", "workshop"),
    ("user research methods", "workshop"),
    ("library journals databases", "library"),
    ("quiet study rooms", "library"),
    ("hostel bootcamp rooms", "hostel"),
    ("visiting founders residential", "hostel"),
    ("alumni network recruiters", "network"),
    ("graduates angel investors", "network"),
    ("internship portal summer openings", "internship"),
    ("partner companies enrolled students", "internship"),
    ("monthly newsletter ecosystem news", "newsletter"),
    ("upcoming events application calls", "newsletter"),
    ("legal clinic incorporation documents", "legal"),
    ("intellectual property filings", "legal"),
]


@dataclass
class SyntheticCorpus:
    chunks: list[Chunk]
    embedder: HashingEmbedder
    sparse_chunk_ids: list[str]
    topic_of: dict[str, str]


def build_chunks(dim: int = 256) -> SyntheticCorpus:
    raw: list[Chunk] = []
    sparse_ids = []
    topic_of = {}
    for i, (text, _, _) in enumerate(SPARSE_FACTS):
        cid = f"fact-{i:02d}"
        sparse_ids.append(cid)
        raw.append(Chunk(cid, f"https://example.org/facts/{i}", text, (0, len(text.split()))))
    for name, base in TOPICS:
        for j, extra in enumerate(VARIANT_WORDS):
            cid = f"topic-{name}-{j}"
            text = f"{base} {extra}."
            topic_of[cid] = name
            raw.append(Chunk(cid, f"https://example.org/{name}/{j}", text, (0, len(text.split()))))
    embedder = HashingEmbedder(dim=dim)
    return SyntheticCorpus(embed_chunks(raw, embedder), embedder, sparse_ids, topic_of)


def build_indexes(tau: float = 0.8):
    synth = build_chunks()
    pc = partition(synth.chunks, tau=tau)
    return synth, pc, build_lexical_index(pc.all), DenseIndex.from_chunks(pc.all)
