// lifeloop/1 wire protocol: message shapes and helpers.
// See ../../docs/protocol.md for the field-by-field reference.

export const PROTOCOL_VERSION = 'lifeloop/1'
export const DEFAULT_SERVER = 'ws://127.0.0.1:7360/ws'

export interface HelloMsg {
  seq: number
  type: 'hello'
  v: string
  script?: string
}

export interface SampleMsg {
  seq: number
  type: 'sample'
  t: number
  angle: number
  distance?: number
  bearing?: number
  facing?: number
  user_id?: string
}

export interface ResetMsg {
  seq: number
  type: 'reset'
}

export type ClientMsg = HelloMsg | SampleMsg | ResetMsg

export interface StageInfo {
  name: string
  start_deg: number
  end_deg: number
  age_label: number | null
}

export interface WelcomeMsg {
  seq: number
  type: 'welcome'
  v: string
  session: string
  script: { name: string; hash: string; rotation_degrees: number; nominal_rotation_s: number }
  stages: StageInfo[]
}

export interface DirectiveMsg {
  seq: number
  type: 'directive'
  t: number
  clip: string
  frame: number
  shot: string
  role: string
  vertical: string
  horizontal: string
  movement: string
  speed: number
  form: string
  clue: string
  transition: 'None' | 'MatchCut'
}

export interface MotionWire {
  kind: 'moving' | 'paused'
  omega?: number
  since?: number
}

export interface StateMsg {
  seq: number
  type: 'state'
  t: number
  age: number
  stage: string
  lap: number
  mode: 'spine' | 'cutscene'
  plot: string | null
  local_progress: number
  cumulative_deg: number
  motion: MotionWire
  hint: string | null
  clue: string
  path: [string, string][]
  closing?: boolean
}

export interface ErrorMsg {
  seq: number
  type: 'error'
  code: string
  message: string
}

export interface HeartbeatMsg {
  seq: number
  type: 'heartbeat'
  t_wall: number
}

export type ServerMsg = WelcomeMsg | DirectiveMsg | StateMsg | ErrorMsg | HeartbeatMsg

export function parseServerMsg(data: string): ServerMsg {
  return JSON.parse(data) as ServerMsg
}

// Canonical one-line text form of a directive, identical to the engine's
// .directives output. Used for golden comparisons against CLI replays.
export function directiveLine(d: DirectiveMsg): string {
  return [
    d.t.toFixed(3), d.clip, String(d.frame), d.shot, d.role, d.vertical,
    d.horizontal, d.movement, d.speed.toFixed(3), d.form, d.clue, d.transition,
  ].join(',')
}

// Clip ids look like "scene/walk@4", "plot/other:butterfly@4", "plot/pause@90".
export interface ClipId {
  node: string
  action: string
  other: string | null
  age: number
}

export function parseClipId(clip: string): ClipId | null {
  const slash = clip.indexOf('/')
  const at = clip.lastIndexOf('@')
  if (slash <= 0 || at <= slash + 1 || at === clip.length - 1) return null
  const age = Number(clip.slice(at + 1))
  if (!Number.isFinite(age)) return null
  let action = clip.slice(slash + 1, at)
  let other: string | null = null
  if (action.startsWith('other:')) {
    other = action.slice(6)
    action = 'other'
    if (!other) return null
  }
  if (!['age_change', 'walk', 'pause', 'wave_hands', 'other'].includes(action)) return null
  return { node: clip.slice(0, slash), action, other, age }
}
