"""Frame sampling | Evenly spaced frame indices per video"""

from ..errors import EmptyVideoError, InputError

DEFAULT_FRAMES = 32


def sample_frames(video_length: int, k: int = DEFAULT_FRAMES) -> list[int]:
    """k evenly spaced indices floor(i * L / k) in [0, L); all frames when L < k"""
    if k < 1:
        raise InputError(f"frame count k must be >= 1, got {k}")
    if video_length <= 0:
        raise EmptyVideoError("video has no frames")

    if video_length < k:
        return list(range(video_length))
    return [i * video_length // k for i in range(k)]
