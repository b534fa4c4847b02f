"""Corpus ingestion: documents, topics, qrels, vocabulary, label hierarchy,
term lists, and subword tokenization.

File formats (all UTF-8):
    corpus.jsonl    one object per line, keys exactly
                    {"id","title","abstract","labels","date"}, date ISO-8601
    topics.jsonl    keys {"id","concept","question","narrative"}
    qrels.tsv       "topic_id<TAB>doc_id<TAB>grade", grade in {0,1,2}
    vocab.txt       one subword per line, line number = id, specials first
    hierarchy.tsv   "child<TAB>parent" edges; a line with a single token
                    declares a parentless node
    termlist.txt    one phrase per line
"""

from __future__ import annotations

import datetime
import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field

from .errors import ValidationError

log = logging.getLogger(__name__)

CORPUS_KEYS = {"id", "title", "abstract", "labels", "date"}
TOPIC_KEYS = {"id", "concept", "question", "narrative"}

# words are \w+ runs; every other non-space character is its own word
_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    abstract: str
    labels: frozenset[str]
    date: datetime.date

    @property
    def text(self) -> str:
        return self.title + " " + self.abstract


@dataclass(frozen=True)
class Topic:
    topic_id: str
    concept: str
    question: str
    narrative: str


class CorpusStore:
    """Immutable-after-load document collection with O(1) id lookup."""

    def __init__(self, docs: list[Document], n_skipped: int = 0):
        self._by_id: dict[str, Document] = {}
        for doc in docs:
            if doc.doc_id in self._by_id:
                raise ValidationError(f"duplicate doc_id {doc.doc_id!r}")
            self._by_id[doc.doc_id] = doc
        self.n_skipped = n_skipped

    def __len__(self):
        return len(self._by_id)

    def __contains__(self, doc_id):
        return doc_id in self._by_id

    def __getitem__(self, doc_id) -> Document:
        return self._by_id[doc_id]

    def __iter__(self):
        return iter(self._by_id.values())

    @property
    def doc_ids(self) -> list[str]:
        return list(self._by_id)


def _parse_document(obj) -> Document:
    if not isinstance(obj, dict) or set(obj) != CORPUS_KEYS:
        raise ValidationError(f"record keys must be exactly {sorted(CORPUS_KEYS)}")
    doc_id, title, abstract = obj["id"], obj["title"], obj["abstract"]
    if not isinstance(doc_id, str) or not doc_id:
        raise ValidationError("id must be a non-empty string")
    if not isinstance(title, str) or not isinstance(abstract, str):
        raise ValidationError("title/abstract must be strings")
    if not (title + abstract).strip():
        raise ValidationError("title+abstract empty after trimming")
    labels = obj["labels"]
    if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
        raise ValidationError("labels must be a list of strings")
    try:
        date = datetime.date.fromisoformat(obj["date"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad date {obj['date']!r}: {exc}") from None
    return Document(doc_id, title, abstract, frozenset(labels), date)


def load_corpus(path) -> CorpusStore:
    """Read a corpus.jsonl file.

    Malformed lines are skipped with a warning and counted in
    ``store.n_skipped``; a duplicate doc_id is fatal.
    """
    docs, skipped, seen = [], 0, set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = _parse_document(json.loads(line))
            except json.JSONDecodeError as exc:
                log.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc.msg)
                skipped += 1
                continue
            except ValidationError as exc:
                log.warning("%s:%d: skipping malformed record (%s)", path, lineno, exc)
                skipped += 1
                continue
            if doc.doc_id in seen:
                raise ValidationError(f"duplicate doc_id {doc.doc_id!r} at {path}:{lineno}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return CorpusStore(docs, n_skipped=skipped)


def save_corpus(store: CorpusStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in store:
            rec = {
                "id": doc.doc_id,
                "title": doc.title,
                "abstract": doc.abstract,
                "labels": sorted(doc.labels),
                "date": doc.date.isoformat(),
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_topics(path) -> dict[str, Topic]:
    topics: dict[str, Topic] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if set(obj) != TOPIC_KEYS:
                raise ValidationError(
                    f"{path}:{lineno}: topic keys must be exactly {sorted(TOPIC_KEYS)}"
                )
            if obj["id"] in topics:
                raise ValidationError(f"duplicate topic_id {obj['id']!r}")
            if not obj["question"].strip():
                raise ValidationError(f"topic {obj['id']!r} has an empty question")
            topics[obj["id"]] = Topic(obj["id"], obj["concept"], obj["question"], obj["narrative"])
    return topics


class Qrels:
    """Graded relevance judgments: (topic_id, doc_id) -> grade in {0,1,2}."""

    def __init__(self, entries: dict[tuple[str, str], int] | None = None):
        self.entries: dict[tuple[str, str], int] = {}
        for key, grade in (entries or {}).items():
            self.add(key[0], key[1], grade)

    def add(self, topic_id: str, doc_id: str, grade: int) -> None:
        if grade not in (0, 1, 2):
            raise ValidationError(f"grade must be 0, 1 or 2, got {grade!r}")
        key = (topic_id, doc_id)
        if key in self.entries:
            raise ValidationError(f"duplicate qrels entry {key}")
        self.entries[key] = grade

    def grade(self, topic_id, doc_id) -> int | None:
        """Judged grade, or None when the pair is unjudged."""
        return self.entries.get((topic_id, doc_id))

    def judged(self, topic_id) -> dict[str, int]:
        return {d: g for (t, d), g in self.entries.items() if t == topic_id}

    def relevant_docs(self, topic_id) -> set[str]:
        """Docs with grade >= 1 (partially related counts as relevant)."""
        return {d for (t, d), g in self.entries.items() if t == topic_id and g >= 1}

    def nonrelevant_docs(self, topic_id) -> set[str]:
        return {d for (t, d), g in self.entries.items() if t == topic_id and g == 0}

    def topic_ids(self) -> list[str]:
        seen = dict.fromkeys(t for t, _ in self.entries)
        return list(seen)

    def __len__(self):
        return len(self.entries)


def load_qrels(path) -> Qrels:
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 tab-separated fields")
            try:
                grade = int(parts[2])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: grade {parts[2]!r} not an integer") from None
            try:
                qrels.add(parts[0], parts[1], grade)
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return qrels


SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
CONTINUATION = "##"


class Vocabulary:
    """Subword vocabulary with dense ids; specials occupy ids 0..4."""

    def __init__(self, tokens: list[str]):
        if tuple(tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValidationError(
                f"first {len(SPECIAL_TOKENS)} entries must be {list(SPECIAL_TOKENS)}"
            )
        self.id_to_token = list(tokens)
        self.token_to_id: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in self.token_to_id:
                raise ValidationError(f"duplicate vocabulary entry {tok!r} at id {i}")
            self.token_to_id[tok] = i
        self.pad_id, self.unk_id, self.cls_id, self.sep_id, self.mask_id = range(5)

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    @classmethod
    def from_pieces(cls, pieces) -> "Vocabulary":
        """Build a vocabulary from non-special pieces (test/fixture helper)."""
        return cls(list(SPECIAL_TOKENS) + list(pieces))


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
    return Vocabulary(tokens)


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(vocab.id_to_token) + "\n")


def normalize(text: str) -> list[str]:
    """NFC-normalize, lowercase, and split into words; punctuation becomes
    its own word."""
    text = unicodedata.normalize("NFC", text).lower()
    return _WORD_RE.findall(text)


def _segment_word(word: str, vocab: Vocabulary) -> list[int]:
    # greedy longest prefix match; a word that cannot be fully segmented
    # collapses to a single [UNK]
    ids = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION + piece
            if piece in vocab.token_to_id:
                match = vocab.token_to_id[piece]
                break
            end -= 1
        if match is None:
            return [vocab.unk_id]
        ids.append(match)
        start = end
    return ids


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Deterministic subword tokenization: normalize then greedily segment
    each word against the vocabulary."""
    ids: list[int] = []
    for word in normalize(text):
        ids.extend(_segment_word(word, vocab))
    return ids


def detokenize(ids, vocab: Vocabulary) -> str:
    """Recover normalized text; continuation pieces rejoin their word."""
    words: list[str] = []
    for i in ids:
        tok = vocab.id_to_token[i]
        if tok.startswith(CONTINUATION) and words:
            words[-1] += tok[len(CONTINUATION):]
        else:
            words.append(tok)
    return " ".join(words)


class HierarchyTree:
    """Rooted DAG of index labels; multiple parents allowed.

    A synthetic root is attached above every parentless node; depth is the
    shortest path from the root.
    """

    ROOT = "<root>"

    def __init__(self, edges: list[tuple[str, str]], nodes=()):
        parents: dict[str, set[str]] = {}
        all_nodes = set(nodes)
        for child, parent in edges:
            if not child or not parent:
                raise ValidationError(f"dangling edge endpoint in {(child, parent)!r}")
            if child == self.ROOT:
                raise ValidationError(f"{self.ROOT!r} is reserved for the synthetic root")
            all_nodes.update((child, parent))
            parents.setdefault(child, set()).add(parent)
        all_nodes.discard(self.ROOT)
        self._check_acyclic(parents)
        for node in all_nodes:
            if not parents.get(node):
                parents.setdefault(node, set()).add(self.ROOT)
        self.parents = {n: tuple(sorted(ps)) for n, ps in parents.items()}
        self.nodes = frozenset(all_nodes)
        self._depth = self._compute_depths()
        self._ancestors: dict[str, frozenset[str]] = {}

    @staticmethod
    def _check_acyclic(parents) -> None:
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {}
        for start in sorted(parents):
            if color.get(start, WHITE) != WHITE:
                continue
            stack = [(start, iter(sorted(parents.get(start, ()))))]
            color[start] = GRAY
            path = [start]
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color.get(nxt, WHITE) == GRAY:
                        cycle = path[path.index(nxt):] + [nxt]
                        raise ValidationError("hierarchy cycle: " + " -> ".join(cycle))
                    if color.get(nxt, WHITE) == WHITE:
                        color[nxt] = GRAY
                        stack.append((nxt, iter(sorted(parents.get(nxt, ())))))
                        path.append(nxt)
                        advanced = True
                        break
                if not advanced:
                    color[node] = BLACK
                    stack.pop()
                    path.pop()

    def _compute_depths(self) -> dict[str, int]:
        children: dict[str, list[str]] = {}
        for node, ps in self.parents.items():
            for p in ps:
                children.setdefault(p, []).append(node)
        depth = {self.ROOT: 0}
        frontier = [self.ROOT]
        while frontier:
            nxt = []
            for node in frontier:
                for child in children.get(node, ()):
                    if child not in depth:
                        depth[child] = depth[node] + 1
                        nxt.append(child)
            frontier = nxt
        unreached = self.nodes - depth.keys()
        if unreached:
            raise ValidationError(f"nodes unreachable from root: {sorted(unreached)}")
        return depth

    def __contains__(self, node):
        return node in self.nodes or node == self.ROOT

    def depth(self, node) -> int:
        return self._depth[node]

    def ancestors(self, node) -> frozenset[str]:
        """All proper ancestors, including the synthetic root."""
        if node in self._ancestors:
            return self._ancestors[node]
        if node == self.ROOT:
            return frozenset()
        acc: set[str] = set()
        stack = list(self.parents[node])
        while stack:
            p = stack.pop()
            if p in acc or p == self.ROOT:
                acc.add(p)
                continue
            acc.add(p)
            stack.extend(self.parents[p])
        result = frozenset(acc)
        self._ancestors[node] = result
        return result


def load_hierarchy(path, nodes=()) -> HierarchyTree:
    """Read a hierarchy.tsv edge list; single-token lines declare nodes."""
    edges, declared = [], list(nodes)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                declared.append(parts[0].strip())
            elif len(parts) == 2:
                edges.append((parts[0].strip(), parts[1].strip()))
            else:
                raise ValidationError(f"{path}:{lineno}: expected 'child<TAB>parent'")
    return HierarchyTree(edges, nodes=declared)


@dataclass
class TermList:
    """Ordered phrases with their subword tokenizations."""

    phrases: list[str]
    token_ids: list[list[int]] = field(default_factory=list)

    @classmethod
    def from_phrases(cls, phrases, vocab: Vocabulary) -> "TermList":
        phrases = [p.strip() for p in phrases if p.strip()]
        if not phrases:
            raise ValidationError("term list is empty")
        token_ids = []
        for phrase in phrases:
            ids = tokenize(phrase, vocab)
            if vocab.unk_id in ids:
                raise ValidationError(f"term {phrase!r} tokenizes to [UNK]")
            token_ids.append(ids)
        return cls(phrases, token_ids)

    def __len__(self):
        return len(self.phrases)


def load_termlist(path, vocab: Vocabulary) -> TermList:
    with open(path, encoding="utf-8") as fh:
        return TermList.from_phrases(fh.readlines(), vocab)
