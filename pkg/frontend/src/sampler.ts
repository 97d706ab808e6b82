// Fixed-rate sample scheduler: turns drag physics into monotone sample
// messages on an exact 20 Hz session-time grid.
//
// Values are quantized to 3 decimals *before* sending so that a recorded
// sample log replayed through the offline CLI sees bit-identical inputs
// (the .trace format carries 3 decimals).

import { DragPhysics } from './physics.js'
import { SampleMsg } from './protocol.js'

export const SAMPLE_RATE_HZ = 20

export function quant3(x: number): number {
  return Number(x.toFixed(3))
}

export class SampleScheduler {
  private tick = 0

  constructor(
    private physics: DragPhysics,
    private userId?: string,
  ) {}

  reset(): void {
    this.tick = 0
  }

  get sessionTime(): number {
    return this.tick / SAMPLE_RATE_HZ
  }

  /** Produce the next sample (seq is filled in by the client). */
  next(distance: number | null): Omit<SampleMsg, 'seq'> {
    this.tick += 1
    const dt = 1 / SAMPLE_RATE_HZ
    const angle = this.physics.step(dt)
    const msg: Omit<SampleMsg, 'seq'> = {
      type: 'sample',
      t: quant3(this.tick / SAMPLE_RATE_HZ),
      angle: quant3(((angle % 360) + 360) % 360),
    }
    if (distance !== null) msg.distance = quant3(distance)
    if (this.userId) msg.user_id = this.userId
    return msg
  }
}
