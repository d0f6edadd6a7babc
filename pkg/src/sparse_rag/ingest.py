"""Crawling a site and reducing its HTML pages to clean body text."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from collections import deque
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urldefrag, urljoin, urlsplit, urlunsplit

import httpx

logger = logging.getLogger(__name__)

DEFAULT_BOILERPLATE = frozenset({"header", "footer", "nav", "script", "style"})

HTML_CONTENT_TYPES = ("text/html", "application/xhtml+xml")

# Tags whose boundaries become line breaks in the extracted text.
BLOCK_TAGS = frozenset(
    {
        "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt",
        "fieldset", "figcaption", "figure", "form", "h1", "h2", "h3", "h4", "h5", "h6",
        "hr", "li", "main", "ol", "p", "pre", "section", "table", "tbody", "td", "tfoot",
        "th", "thead", "tr", "ul", "body", "html", "head", "title",
    }
)

# HTML void elements never get an end tag, so they must not open a skipped region.
VOID_TAGS = frozenset(
    {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr"}
)

_TAG_LIKE = re.compile(r"<(?=[A-Za-z])")


class FetchError(RuntimeError):
    """Raised when the crawl seed cannot be fetched."""

    def __init__(self, uri: str, reason: str):
        super().__init__(f"failed to fetch {uri}: {reason}")
        self.uri = uri
        self.reason = reason


@dataclass(frozen=True)
class RawDocument:
    source_uri: str
    html: str
    fetched_at: float


@dataclass(frozen=True)
class CleanDocument:
    source_uri: str
    body: str


def normalize_uri(uri: str, base: str | None = None) -> str:
    """Resolve ``uri`` against ``base``, drop the fragment, lowercase scheme and host."""
    if base is not None:
        uri = urljoin(base, uri)
    uri, _ = urldefrag(uri)
    parts = urlsplit(uri)
    netloc = parts.netloc.lower()
    path = parts.path or "/"
    return urlunsplit((parts.scheme.lower(), netloc, path, parts.query, ""))


def is_absolute_uri(uri: str) -> bool:
    parts = urlsplit(uri)
    return bool(parts.scheme) and bool(parts.netloc)


class _LinkCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.links: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            for name, value in attrs:
                if name == "href" and value:
                    self.links.append(value.strip())


def extract_links(html: str, page_uri: str) -> list[str]:
    """Return normalized http(s) link targets found in ``html``, in document order."""
    collector = _LinkCollector()
    try:
        collector.feed(html)
        collector.close()
    except Exception:  # tag soup; keep whatever was collected
        logger.debug("link extraction aborted on %s", page_uri, exc_info=True)
    out = []
    for href in collector.links:
        if href.startswith(("mailto:", "javascript:", "tel:", "data:")):
            continue
        target = normalize_uri(href, base=page_uri)
        if urlsplit(target).scheme in ("http", "https"):
            out.append(target)
    return out


def _is_html(response: httpx.Response) -> bool:
    content_type = response.headers.get("content-type", "")
    if not content_type:
        return True
    return content_type.split(";")[0].strip().lower() in HTML_CONTENT_TYPES


def crawl(
    seed_uri: str,
    max_depth: int = 2,
    same_host_only: bool = True,
    *,
    delay: float = 0.1,
    client: httpx.Client | None = None,
    max_pages: int | None = None,
) -> list[RawDocument]:
    """Breadth-first crawl starting at ``seed_uri``.

    Every page is fetched at most once, keyed by its normalized URI. Pages
    deeper than ``max_depth`` links from the seed are not fetched. Responses
    that are not HTML are skipped without error; only an unreachable seed
    raises :class:`FetchError`.

    Args:
        seed_uri: Absolute http(s) URI to start from.
        max_depth: Maximum link distance from the seed (0 fetches only the seed).
        same_host_only: Skip links whose host differs from the seed's.
        delay: Seconds to sleep between consecutive requests.
        client: Optional preconfigured HTTP client (used as-is, not closed).
        max_pages: Optional hard cap on the number of documents returned.
    """
    if not is_absolute_uri(seed_uri):
        raise ValueError(f"seed_uri must be an absolute URI: {seed_uri!r}")
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")

    own_client = client is None
    if own_client:
        client = httpx.Client(follow_redirects=True, timeout=10.0)

    seed = normalize_uri(seed_uri)
    seed_host = urlsplit(seed).netloc
    frontier: deque[tuple[str, int]] = deque([(seed, 0)])
    seen = {seed}
    documents: list[RawDocument] = []
    first_request = True

    try:
        while frontier:
            if max_pages is not None and len(documents) >= max_pages:
                break
            uri, depth = frontier.popleft()
            if not first_request and delay > 0:
                time.sleep(delay)
            first_request = False

            try:
                response = client.get(uri)
                response.raise_for_status()
            except httpx.HTTPError as exc:
                if uri == seed:
                    raise FetchError(uri, str(exc)) from exc
                logger.warning("skipping %s: %s", uri, exc)
                continue

            if not _is_html(response):
                logger.debug("skipping non-HTML %s", uri)
                continue

            html = response.text
            documents.append(RawDocument(source_uri=uri, html=html, fetched_at=time.time()))

            if depth >= max_depth:
                continue
            for link in extract_links(html, uri):
                if link in seen:
                    continue
                if same_host_only and urlsplit(link).netloc != seed_host:
                    continue
                seen.add(link)
                frontier.append((link, depth + 1))
    finally:
        if own_client:
            client.close()

    return documents


class _TextExtractor(HTMLParser):
    def __init__(self, boilerplate: frozenset[str]) -> None:
        super().__init__(convert_charrefs=True)
        self.boilerplate = boilerplate
        self.skip_depth = 0
        self.parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in self.boilerplate and tag not in VOID_TAGS:
            self.skip_depth += 1
        elif tag in BLOCK_TAGS:
            self.parts.append("\n")

    def handle_startendtag(self, tag, attrs):
        if tag in BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in self.boilerplate:
            if self.skip_depth:
                self.skip_depth -= 1
        elif tag in BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if not self.skip_depth:
            self.parts.append(data)


def _clean_lines(text: str) -> str:
    lines = (" ".join(line.split()) for line in text.split("\n"))
    return "\n".join(line for line in lines if line)


def html_to_text(doc: RawDocument, boilerplate_tags: frozenset[str] | set[str] = DEFAULT_BOILERPLATE) -> CleanDocument:
    """Strip boilerplate regions and markup from ``doc.html``.

    Block-level element boundaries become single newlines and whitespace runs
    inside a line collapse to one space. Decoded entities that would read as a
    tag opener (``&lt;p``) get a space inserted after the ``<`` so the body
    never contains markup-looking text.
    """
    parser = _TextExtractor(frozenset(t.lower() for t in boilerplate_tags))
    try:
        parser.feed(doc.html)
        parser.close()
    except Exception:
        logger.debug("html parse aborted for %s", doc.source_uri, exc_info=True)
    # Raw newlines inside text nodes are ordinary whitespace in HTML.
    text = "".join(p if p == "\n" else p.replace("\n", " ").replace("\r", " ") for p in parser.parts)
    body = _TAG_LIKE.sub("< ", _clean_lines(text))
    return CleanDocument(source_uri=doc.source_uri, body=body)


def page_filename(uri: str) -> str:
    return hashlib.sha256(normalize_uri(uri).encode("utf-8")).hexdigest()[:16] + ".txt"


def write_corpus(docs: list[RawDocument], out_dir: str | Path, boilerplate_tags=DEFAULT_BOILERPLATE) -> Path:
    """Write one cleaned text file per document plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for raw in docs:
        clean = html_to_text(raw, boilerplate_tags)
        name = page_filename(raw.source_uri)
        (out / name).write_text(clean.body, encoding="utf-8")
        manifest.append({"uri": raw.source_uri, "file": name, "fetched_at": raw.fetched_at})
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest_path


def read_corpus(in_dir: str | Path) -> list[CleanDocument]:
    """Load text files written by :func:`write_corpus`.

    Without a manifest every ``*.txt`` file is read and its path used as the source URI.
    """
    src = Path(in_dir)
    manifest_path = src / "manifest.json"
    if manifest_path.exists():
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
        return [
            CleanDocument(source_uri=e["uri"], body=(src / e["file"]).read_text(encoding="utf-8"))
            for e in entries
        ]
    return [
        CleanDocument(source_uri=path.resolve().as_uri(), body=path.read_text(encoding="utf-8"))
        for path in sorted(src.glob("*.txt"))
    ]
