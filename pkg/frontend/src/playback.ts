/**
 * Time playback over the loaded frame list: play/pause, scrubbing, speed.
 * While playing at the live edge, newly streamed frames are followed
 * immediately; scrubbing backwards detaches from the live edge.
 */

export interface PlaybackState {
  playing: boolean;
  speed: number; // frames advanced per tick
  current: number; // current frame index
  frameCount: number;
  followLive: boolean;
}

export function initialPlayback(): PlaybackState {
  return { playing: true, speed: 1, current: 0, frameCount: 0, followLive: true };
}

export function onFrameArrived(state: PlaybackState): PlaybackState {
  const frameCount = state.frameCount + 1;
  const next = { ...state, frameCount };
  if (state.playing && state.followLive) {
    next.current = frameCount - 1;
  }
  return next;
}

export function play(state: PlaybackState): PlaybackState {
  return { ...state, playing: true };
}

export function pause(state: PlaybackState): PlaybackState {
  return { ...state, playing: false };
}

export function scrub(state: PlaybackState, index: number): PlaybackState {
  const clamped = Math.min(Math.max(index, 0), Math.max(state.frameCount - 1, 0));
  return { ...state, current: clamped, followLive: clamped >= state.frameCount - 1 };
}

export function setSpeed(state: PlaybackState, speed: number): PlaybackState {
  return { ...state, speed: Math.max(speed, 0.25) };
}

/** One playback tick: advance by speed, sticking to the last frame. */
export function tick(state: PlaybackState): PlaybackState {
  if (!state.playing || state.frameCount === 0) return state;
  const next = Math.min(state.current + state.speed, state.frameCount - 1);
  return { ...state, current: Math.floor(next), followLive: next >= state.frameCount - 1 };
}
