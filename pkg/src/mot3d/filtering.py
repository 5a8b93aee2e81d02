"""Per-object constant-velocity Kalman filter over a 10-dimensional state.

State ordering is fixed as [x, y, z, theta, l, w, h, vx, vy, vz] with
velocities in meters/frame (dt is exactly one frame). The observation is the
first 7 components, so H is a plain selector and velocity is corrected only
through the cross covariance. Heading is kept in (-pi, pi] after every
operation; detector headings that disagree with the track by more than pi/2
are flipped by pi before the residual is formed, because the box footprint is
symmetric under a half turn and the association IoU cannot tell the two
apart.

A KalmanTrack is a value owned by one tracker. predict/update mutate the
track in place and return it; hit_streak zeroing for unmatched tracks is done
by the tracking loop at the end of each frame, which is where the
"streak broken" condition is actually known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry3d import Box3D, wrap_angle

STATE_DIM = 10
OBS_DIM = 7

# Constant-velocity transition: x += vx, y += vy, z += vz per frame.
_F = np.eye(STATE_DIM)
_F[0, 7] = _F[1, 8] = _F[2, 9] = 1.0

# Observe position, heading and size; never velocity.
_H = np.zeros((OBS_DIM, STATE_DIM))
_H[:OBS_DIM, :OBS_DIM] = np.eye(OBS_DIM)

MIN_SIZE = 0.01


def transition_matrix() -> np.ndarray:
    return _F.copy()


def observation_matrix() -> np.ndarray:
    return _H.copy()


@dataclass
class NoiseParams:
    """Scalar multipliers on the default P0/Q/R covariances."""

    p0_scale: float = 1.0
    q_scale: float = 1.0
    r_scale: float = 1.0

    def initial_covariance(self) -> np.ndarray:
        # 10 * I with the unobserved velocity block inflated 1000x.
        p = np.eye(STATE_DIM) * 10.0
        p[7:, 7:] *= 1000.0
        return p * self.p0_scale

    def process_noise(self) -> np.ndarray:
        # Unit noise on pose, none on size (near-constant), small on velocity.
        q = np.eye(STATE_DIM)
        q[4:7, 4:7] = 0.0
        q[7:, 7:] *= 0.01
        return q * self.q_scale

    def observation_noise(self) -> np.ndarray:
        return np.eye(OBS_DIM) * self.r_scale


@dataclass
class KalmanTrack:
    """Filter state plus identity and lifecycle counters for one object."""

    id: int
    state: np.ndarray
    covariance: np.ndarray
    score: float
    hits: int = 1
    hit_streak: int = 1
    time_since_update: int = 0
    size_clamp_count: int = 0
    noise: NoiseParams = field(default_factory=NoiseParams)

    def box(self) -> Box3D:
        s = self.state
        return Box3D(x=s[0], y=s[1], z=s[2], l=s[4], w=s[5], h=s[6], theta=s[3])


def init_track(box: Box3D, score: float, track_id: int,
               noise: NoiseParams | None = None) -> KalmanTrack:
    """Start a track from a first observation, with zero velocity."""
    noise = noise or NoiseParams()
    state = np.zeros(STATE_DIM)
    state[:OBS_DIM] = (box.x, box.y, box.z, box.theta, box.l, box.w, box.h)
    return KalmanTrack(
        id=track_id,
        state=state,
        covariance=noise.initial_covariance(),
        score=score,
        noise=noise,
    )


def predict(track: KalmanTrack) -> KalmanTrack:
    """Advance one frame under the constant-velocity model."""
    track.state = _F @ track.state
    track.state[3] = wrap_angle(track.state[3])
    p = _F @ track.covariance @ _F.T + track.noise.process_noise()
    track.covariance = 0.5 * (p + p.T)
    track.time_since_update += 1
    return track


def update(track: KalmanTrack, box: Box3D, score: float) -> KalmanTrack:
    """Correct the track with a matched observation."""
    z = np.array((box.x, box.y, box.z, box.theta, box.l, box.w, box.h))
    innovation = z - _H @ track.state
    residual_theta = wrap_angle(innovation[3])
    if abs(residual_theta) > math.pi / 2.0:
        # Detector heading off by pi; flip it rather than drag the track
        # through a half turn.
        residual_theta = wrap_angle(residual_theta + math.pi)
    innovation[3] = residual_theta

    p = track.covariance
    r = track.noise.observation_noise()
    s = _H @ p @ _H.T + r
    gain = p @ _H.T @ np.linalg.inv(s)

    track.state = track.state + gain @ innovation
    track.state[3] = wrap_angle(track.state[3])
    for i in (4, 5, 6):
        if track.state[i] < MIN_SIZE:
            track.state[i] = MIN_SIZE
            track.size_clamp_count += 1

    # Joseph form keeps the covariance PSD under roundoff.
    i_kh = np.eye(STATE_DIM) - gain @ _H
    p = i_kh @ p @ i_kh.T + gain @ r @ gain.T
    track.covariance = 0.5 * (p + p.T)

    track.hits += 1
    track.hit_streak += 1
    track.time_since_update = 0
    track.score = score
    return track
