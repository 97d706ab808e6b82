// The view model is a pure reduction of the server message stream: the
// renderer reads it, nothing in it advances the story locally. Replaying a
// recorded message log reproduces the identical view-model sequence.

import { DirectiveMsg, ServerMsg, StageInfo, parseClipId } from './protocol.js'

export interface ViewModel {
  connected: boolean
  session: string | null
  scriptName: string | null
  stages: StageInfo[]
  // story state, verbatim from the server
  stage: string | null
  age: number | null
  lap: number
  mode: 'spine' | 'cutscene' | null
  plot: string | null
  localProgress: number
  cumulativeDeg: number
  motionKind: 'moving' | 'paused' | null
  omega: number
  hint: string | null
  clue: string | null
  path: [string, string][]
  // active render instruction
  clip: string | null
  frame: number
  shot: string | null
  role: string | null
  horizontal: string | null
  movement: string | null
  movementSpeed: number
  form: string | null
  transition: 'None' | 'MatchCut'
  // chrome
  errorChip: string | null
  closing: boolean
  lastSeq: number
}

export function initialViewModel(): ViewModel {
  return {
    connected: false,
    session: null,
    scriptName: null,
    stages: [],
    stage: null,
    age: null,
    lap: 0,
    mode: null,
    plot: null,
    localProgress: 0,
    cumulativeDeg: 0,
    motionKind: null,
    omega: 0,
    hint: null,
    clue: null,
    path: [],
    clip: null,
    frame: 0,
    shot: null,
    role: null,
    horizontal: null,
    movement: null,
    movementSpeed: 0,
    form: null,
    transition: 'None',
    errorChip: null,
    closing: false,
    lastSeq: 0,
  }
}

function applyDirective(vm: ViewModel, msg: DirectiveMsg): ViewModel {
  if (parseClipId(msg.clip) === null) {
    // keep rendering the previous clip; surface the problem without stopping
    return { ...vm, errorChip: `unknown clip ${msg.clip}`, lastSeq: msg.seq }
  }
  return {
    ...vm,
    clip: msg.clip,
    frame: msg.frame,
    shot: msg.shot,
    role: msg.role,
    horizontal: msg.horizontal,
    movement: msg.movement,
    movementSpeed: msg.speed,
    form: msg.form,
    transition: msg.transition,
    errorChip: null,
    lastSeq: msg.seq,
  }
}

export function applyServerMsg(vm: ViewModel, msg: ServerMsg): ViewModel {
  switch (msg.type) {
    case 'welcome':
      return {
        ...initialViewModel(),
        connected: true,
        session: msg.session,
        scriptName: msg.script.name,
        stages: msg.stages,
        lastSeq: msg.seq,
      }
    case 'directive':
      return applyDirective(vm, msg)
    case 'state':
      return {
        ...vm,
        stage: msg.stage,
        age: msg.age,
        lap: msg.lap,
        mode: msg.mode,
        plot: msg.plot,
        localProgress: msg.local_progress,
        cumulativeDeg: msg.cumulative_deg,
        motionKind: msg.motion.kind,
        omega: msg.motion.omega ?? 0,
        hint: msg.hint,
        clue: msg.clue,
        path: msg.path,
        closing: msg.closing === true,
        lastSeq: msg.seq,
      }
    case 'error':
      return { ...vm, errorChip: `${msg.code}: ${msg.message}`, lastSeq: msg.seq }
    case 'heartbeat':
      return { ...vm, lastSeq: msg.seq }
  }
}

export function replayLog(log: ServerMsg[]): ViewModel[] {
  const out: ViewModel[] = []
  let vm = initialViewModel()
  for (const msg of log) {
    vm = applyServerMsg(vm, msg)
    out.push(vm)
  }
  return out
}
