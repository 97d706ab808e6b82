// Drag physics for the virtual rotating screen.
//
// While the pointer is down, angular velocity follows the smoothed drag
// speed. On release the velocity ramps linearly to zero over the decay time
// (1 s, the feel of a heavy physical screen), so a casual push coasts a
// little and a release followed by standing still reads as a stop.

const DEG_PER_PX = 0.03 // a relaxed ~300 px/s drag lands near the nominal 9 deg/s
const VELOCITY_SMOOTHING = 0.35

export class DragPhysics {
  readonly decayS: number
  private angle = 0 // unwrapped degrees
  private omega = 0 // deg/s
  private dragging = false
  private lastX = 0
  private lastMoveMs = 0
  private releaseOmega = 0
  private releaseAtS = 0
  private nowS = 0

  constructor(decayS = 1.0) {
    this.decayS = decayS
  }

  pointerDown(x: number, nowMs: number): void {
    this.dragging = true
    this.lastX = x
    this.lastMoveMs = nowMs
    this.omega = 0
  }

  pointerMove(x: number, nowMs: number): void {
    if (!this.dragging) return
    const dtMs = nowMs - this.lastMoveMs
    if (dtMs <= 0) return
    const raw = ((x - this.lastX) * DEG_PER_PX) / (dtMs / 1000)
    this.omega = VELOCITY_SMOOTHING * raw + (1 - VELOCITY_SMOOTHING) * this.omega
    this.lastX = x
    this.lastMoveMs = nowMs
  }

  pointerUp(): void {
    if (!this.dragging) return
    this.dragging = false
    this.releaseOmega = this.omega
    this.releaseAtS = this.nowS
  }

  /** Advance simulation time by dt seconds; returns the unwrapped angle. */
  step(dt: number): number {
    this.nowS += dt
    if (!this.dragging) {
      const since = this.nowS - this.releaseAtS
      const k = Math.max(0, 1 - since / this.decayS)
      this.omega = this.releaseOmega * k
    }
    this.angle += this.omega * dt
    if (this.angle < 0) this.angle = 0 // the story is one-way; don't unwind below start
    return this.angle
  }

  get angleDeg(): number {
    return ((this.angle % 360) + 360) % 360
  }

  get omegaDegS(): number {
    return this.omega
  }

  get isDragging(): boolean {
    return this.dragging
  }
}
