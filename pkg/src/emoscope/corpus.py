"""Streaming ingestion and filtering of newline-delimited post records."""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import ConfigError, RecordError


class Gender(Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


def _coerce_gender(value) -> Gender:
    if value == "male":
        return Gender.MALE
    if value == "female":
        return Gender.FEMALE
    return Gender.UNKNOWN


@dataclass(frozen=True)
class Post:
    """One social-media message, timestamp normalized to UTC (second resolution)."""

    id: str
    timestamp: datetime
    text: str
    author_gender: Gender = Gender.UNKNOWN
    author_followers: int = 0
    is_retweet: bool = False

    def day(self, tz_offset_minutes: int = 0) -> date:
        """Calendar-day bucket; a fixed minute offset shifts the day boundary."""
        if tz_offset_minutes:
            return (self.timestamp + timedelta(minutes=tz_offset_minutes)).date()
        return self.timestamp.date()


@dataclass(frozen=True)
class FilterConfig:
    """Follower-count bounds (inclusive) and retweet exclusion, applied at ingestion."""

    min_followers: int = 100
    max_followers: int = 100_000
    exclude_retweets: bool = True

    def __post_init__(self):
        if self.min_followers < 0:
            raise ConfigError(f"min_followers must be >= 0, got {self.min_followers}")
        if self.min_followers > self.max_followers:
            raise ConfigError(
                f"min_followers ({self.min_followers}) exceeds "
                f"max_followers ({self.max_followers})"
            )


def _parse_timestamp(raw, line_no, source) -> datetime:
    if not isinstance(raw, str):
        raise RecordError("created_at is not a string", line_no, source)
    s = raw.strip()
    # Python 3.10 fromisoformat rejects the Z suffix.
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(s)
    except ValueError:
        raise RecordError(f"unparseable created_at {raw!r}", line_no, source) from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)  # zone-less inputs are taken as UTC
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def parse_post_record(line: str, line_no: int | None = None, source: str | None = None) -> Post:
    """Parse one NDJSON record into a Post.

    A missing author_gender maps to unknown and a missing is_retweet to
    False; anything else absent or mistyped raises RecordError.
    """
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as err:
        raise RecordError(f"invalid JSON ({err.msg})", line_no, source) from None
    if not isinstance(rec, dict):
        raise RecordError("record is not a JSON object", line_no, source)

    post_id = rec.get("id")
    if post_id is None:
        raise RecordError("missing id", line_no, source)
    if not isinstance(post_id, str):
        post_id = str(post_id)

    if "created_at" not in rec:
        raise RecordError("missing created_at", line_no, source)
    ts = _parse_timestamp(rec["created_at"], line_no, source)

    text = rec.get("text")
    if not isinstance(text, str):
        raise RecordError("missing or non-string text", line_no, source)

    followers = rec.get("author_followers")
    if followers is None:
        raise RecordError("missing author_followers", line_no, source)
    if isinstance(followers, bool) or not isinstance(followers, (int, float)):
        raise RecordError("author_followers is not a number", line_no, source)
    if isinstance(followers, float):
        if not followers.is_integer():
            raise RecordError("author_followers is not an integer", line_no, source)
        followers = int(followers)
    if followers < 0:
        raise RecordError("author_followers is negative", line_no, source)

    retweet = rec.get("is_retweet", False)
    if not isinstance(retweet, bool):
        raise RecordError("is_retweet is not a boolean", line_no, source)

    return Post(
        id=post_id,
        timestamp=ts,
        text=text,
        author_gender=_coerce_gender(rec.get("author_gender")),
        author_followers=followers,
        is_retweet=retweet,
    )


def post_record(post: Post) -> dict:
    """Documented wire fields of a post, ready for json.dumps."""
    return {
        "id": post.id,
        "created_at": post.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "text": post.text,
        "author_gender": post.author_gender.value,
        "author_followers": post.author_followers,
        "is_retweet": post.is_retweet,
    }


def serialize_post(post: Post) -> str:
    return json.dumps(post_record(post), ensure_ascii=False)


def filter_post(post: Post, cfg: FilterConfig) -> bool:
    """Keep/drop decision; follower bounds are inclusive on both ends."""
    if post.is_retweet and cfg.exclude_retweets:
        return False
    return cfg.min_followers <= post.author_followers <= cfg.max_followers


@dataclass
class StreamCounts:
    """Exact bookkeeping for one ingestion pass."""

    records: int = 0
    malformed: int = 0
    dropped: int = 0
    kept: int = 0

    @property
    def parsed(self) -> int:
        return self.records - self.malformed

    def as_dict(self) -> dict:
        return {
            "records": self.records,
            "parsed": self.parsed,
            "malformed": self.malformed,
            "filtered": self.dropped,
            "kept": self.kept,
        }


def open_ndjson(path):
    """Open an NDJSON input for reading, transparently decompressing .gz files."""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def stream_posts(
    paths: Iterable,
    filter_config: FilterConfig | None = None,
    counts: StreamCounts | None = None,
    on_error: Callable[[RecordError], None] | None = None,
) -> Iterator[Post]:
    """Yield filtered posts from NDJSON files in order.

    Malformed lines are counted (and passed to on_error) without aborting
    the stream. Blank lines are ignored entirely.
    """
    if counts is None:
        counts = StreamCounts()
    for path in paths:
        name = str(path)
        with open_ndjson(path) as fh:
            for line_no, line in enumerate(fh, 1):
                if not line or line.isspace():
                    continue
                counts.records += 1
                try:
                    post = parse_post_record(line, line_no=line_no, source=name)
                except RecordError as err:
                    counts.malformed += 1
                    if on_error is not None:
                        on_error(err)
                    continue
                if filter_config is not None and not filter_post(post, filter_config):
                    counts.dropped += 1
                    continue
                counts.kept += 1
                yield post
