"""Builds the two data products: the SFT set (all verified samples, no
complexity filter) and the composite referring benchmark (reported L_max >= 3,
exclusion list applied, human-accepted only), plus dataset statistics and
strata assignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Optional

from .records import (
    STATUS_HUMAN_ACCEPTED,
    STATUS_VERIFIED,
    GroundedSample,
)

BENCHMARK_MIN_LMAX = 3

HOP_BUCKETS = ("3", "4", "5plus")
ANCHOR_BUCKETS = ("3", "4", "5plus")


def bucketize(value: int) -> str:
    """Map a hop level or anchor count onto the 3 / 4 / 5+ report buckets."""
    if value >= 5:
        return "5plus"
    return str(value)


@dataclass(frozen=True)
class StrataKey:
    hop_bucket: str
    anchor_bucket: str

    @classmethod
    def for_sample(cls, sample: GroundedSample) -> "StrataKey":
        assert sample.parsed is not None
        return cls(
            hop_bucket=bucketize(sample.parsed.l_max_reported),
            anchor_bucket=bucketize(sample.parsed.anchor_count()),
        )

    def to_dict(self) -> dict[str, str]:
        return {"hop_bucket": self.hop_bucket, "anchor_bucket": self.anchor_bucket}


@dataclass
class DatasetStats:
    count: int
    avg_words_per_sentence: float
    avg_hops_per_sentence: float
    avg_max_hop_level: float
    hop_level_distribution: dict[str, float]  # bucket -> percentage

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "avg_words_per_sentence": self.avg_words_per_sentence,
            "avg_hops_per_sentence": self.avg_hops_per_sentence,
            "avg_max_hop_level": self.avg_max_hop_level,
            "hop_level_distribution": dict(self.hop_level_distribution),
        }


@dataclass
class BenchmarkBuildResult:
    admitted: list[GroundedSample]
    pending: list[GroundedSample]  # verified but not human-reviewed
    dropped: list[tuple[str, str]]  # (expression id, reason)


def sft_eligible(sample: GroundedSample) -> bool:
    return sample.status in (STATUS_VERIFIED, STATUS_HUMAN_ACCEPTED)


def build_sft(samples: Iterable[GroundedSample], boxpoint_config: Any = None) -> list[dict[str, Any]]:
    """SFT records: every verified (or human-accepted) sample, no complexity
    filter. Each record carries the CoT answer, per-noun boxes, and the
    target's box-point training fields."""
    from .boxpoint import sft_fields  # local import: boxpoint builds on records

    out = []
    for s in samples:
        if not sft_eligible(s):
            continue
        assert s.parsed is not None and s.cot is not None and s.boxes is not None
        record = s.to_dict()
        record.update(sft_fields(s, boxpoint_config))
        out.append(record)
    return out


def build_benchmark(samples: Iterable[GroundedSample],
                    exclusion_list: Iterable[str] = ()) -> BenchmarkBuildResult:
    """Admit a sample iff reported L_max >= 3, its image is not excluded, and a
    human reviewer accepted it. Verified-but-unreviewed samples are held in a
    pending queue, never silently admitted or dropped."""
    excluded = set(exclusion_list)
    result = BenchmarkBuildResult(admitted=[], pending=[], dropped=[])
    for s in samples:
        if s.parsed is None:
            result.dropped.append((s.expression.id, "no parse"))
            continue
        if s.status == STATUS_VERIFIED:
            result.pending.append(s)
            continue
        if s.status != STATUS_HUMAN_ACCEPTED:
            result.dropped.append((s.expression.id, f"status {s.status}"))
            continue
        if s.parsed.l_max_reported < BENCHMARK_MIN_LMAX:
            result.dropped.append(
                (s.expression.id, f"l_max {s.parsed.l_max_reported} < {BENCHMARK_MIN_LMAX}"))
            continue
        if s.expression.image_id in excluded:
            result.dropped.append((s.expression.id, "image on exclusion list"))
            continue
        result.admitted.append(s)
    return result


def benchmark_record(sample: GroundedSample) -> dict[str, Any]:
    record = sample.to_dict()
    record["strata"] = StrataKey.for_sample(sample).to_dict()
    return record


def compute_stats(samples: list[GroundedSample]) -> DatasetStats:
    """Dataset statistics over parsed samples; hop distribution is over the
    reported-L_max report buckets."""
    if not samples:
        raise ValueError("compute_stats requires a non-empty dataset")
    n = len(samples)
    words = hops = lmax_sum = 0
    bucket_counts = {b: 0 for b in HOP_BUCKETS}
    for s in samples:
        assert s.parsed is not None
        words += len(s.expression.tokens)
        hops += s.parsed.anchor_count()
        lmax = s.parsed.l_max_reported
        lmax_sum += lmax
        bucket = bucketize(lmax)
        if bucket in bucket_counts:
            bucket_counts[bucket] += 1
        elif lmax >= 5:
            bucket_counts["5plus"] += 1
    distribution = {b: 100.0 * c / n for b, c in bucket_counts.items()}
    return DatasetStats(
        count=n,
        avg_words_per_sentence=words / n,
        avg_hops_per_sentence=hops / n,
        avg_max_hop_level=lmax_sum / n,
        hop_level_distribution=distribution,
    )


def merge_stats(parts: list[DatasetStats]) -> DatasetStats:
    """Shard-additive merge via count-weighted means."""
    parts = [p for p in parts if p.count > 0]
    if not parts:
        raise ValueError("merge_stats requires at least one non-empty shard")
    n = sum(p.count for p in parts)
    wavg = lambda get: sum(get(p) * p.count for p in parts) / n
    return DatasetStats(
        count=n,
        avg_words_per_sentence=wavg(lambda p: p.avg_words_per_sentence),
        avg_hops_per_sentence=wavg(lambda p: p.avg_hops_per_sentence),
        avg_max_hop_level=wavg(lambda p: p.avg_max_hop_level),
        hop_level_distribution={
            b: wavg(lambda p: p.hop_level_distribution.get(b, 0.0))
            for b in HOP_BUCKETS
        },
    )


def load_exclusion_list(path: Optional[str]) -> set[str]:
    """Newline-delimited image ids; `#` comments and blank lines ignored."""
    if not path:
        return set()
    out = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                out.add(line)
    return out
