from .clips import MotionClip, read_clip, write_clip, resample, truncate
from .skeleton import SkeletonSpec, DESK_SKELETON, FULL_SKELETON
from .canonical import canonicalize
from .standardize import StandardizationStats, fit_stats, standardize, destandardize
from .synth import synth_generate, SYNTH_FAMILIES, parse_family
from .manifest import ManifestEntry, load_manifest, save_manifest, read_beats, write_beats

__all__ = [
    "MotionClip", "read_clip", "write_clip", "resample", "truncate",
    "SkeletonSpec", "DESK_SKELETON", "FULL_SKELETON", "canonicalize",
    "StandardizationStats", "fit_stats", "standardize", "destandardize",
    "synth_generate", "SYNTH_FAMILIES", "parse_family",
    "ManifestEntry", "load_manifest", "save_manifest", "read_beats", "write_beats",
]
