// Canvas renderer: a procedural shadow whose height and posture track the
// protagonist's age, a parallax ground that scrolls with the follow speed,
// zoom by shot width and a slight skew for side/canted viewing angles.
// Everything drawn here is a projection of the view model; no story logic.

import { ViewModel } from './viewmodel.js'

const SHOT_ZOOM: Record<string, number> = {
  LongShot: 0.55,
  FullShot: 0.75,
  MediumShot: 1.0,
  CloseUp: 1.45,
}

const SKEW: Record<string, number> = { Frontal: 0, Side: 0.1, Canted: 0.22 }

export interface SilhouetteShape {
  height: number  // fraction of canvas height
  stoop: number   // radians of forward lean
  headR: number   // fraction of height
}

/** Age-parametric shadow: small child, upright adult, stooped elder. */
export function silhouetteFor(age: number): SilhouetteShape {
  const a = Math.max(0, Math.min(100, age))
  let height: number
  if (a <= 18) height = 0.25 + (0.62 - 0.25) * (a / 18)
  else if (a <= 55) height = 0.62
  else height = 0.62 - 0.1 * Math.min(1, (a - 55) / 35)
  const stoop = a <= 50 ? 0 : 0.45 * Math.min(1, (a - 50) / 40)
  const headR = a <= 10 ? 0.17 : 0.13
  return { height, stoop, headR }
}

export class Renderer {
  private ctx: CanvasRenderingContext2D
  private scroll = 0
  private fade = 0 // 1 right after a hard (non-match) cut, decays fast
  private lastClip: string | null = null

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext('2d')
    if (!ctx) throw new Error('no 2d context')
    this.ctx = ctx
  }

  draw(vm: ViewModel, dt: number): void {
    const { ctx } = this
    const w = this.canvas.width
    const h = this.canvas.height

    if (vm.clip !== this.lastClip && this.lastClip !== null) {
      this.fade = vm.transition === 'MatchCut' ? 0 : 1
    }
    this.lastClip = vm.clip
    this.fade = Math.max(0, this.fade - dt / 0.15)

    if (vm.movement === 'Follow') this.scroll += vm.movementSpeed * dt * 4

    ctx.setTransform(1, 0, 0, 1, 0, 0)
    ctx.fillStyle = '#e8e4da'
    ctx.fillRect(0, 0, w, h)

    const zoom = SHOT_ZOOM[vm.shot ?? 'MediumShot'] ?? 1
    const skew = SKEW[vm.horizontal ?? 'Frontal'] ?? 0
    ctx.setTransform(zoom, 0, skew * zoom, zoom, (w * (1 - zoom)) / 2, (h * (1 - zoom)) / 2)

    // ground with parallax ticks
    ctx.strokeStyle = '#b9b2a4'
    ctx.lineWidth = 2
    const groundY = h * 0.78
    ctx.beginPath()
    ctx.moveTo(-w, groundY)
    ctx.lineTo(2 * w, groundY)
    ctx.stroke()
    ctx.strokeStyle = '#cfc8b9'
    for (let x = -((this.scroll * 2) % 140); x < 2 * w; x += 140) {
      ctx.beginPath()
      ctx.moveTo(x, groundY)
      ctx.lineTo(x - 26, groundY + 14)
      ctx.stroke()
    }

    this.drawShadow(vm, w, h, groundY)

    if (this.fade > 0) {
      ctx.setTransform(1, 0, 0, 1, 0, 0)
      ctx.fillStyle = `rgba(232,228,218,${this.fade.toFixed(3)})`
      ctx.fillRect(0, 0, w, h)
    }
  }

  private drawShadow(vm: ViewModel, w: number, h: number, groundY: number): void {
    const { ctx } = this
    const shape = silhouetteFor(vm.age ?? 1)
    const H = shape.height * h
    const cx = w * 0.5
    // walk-cycle sway driven by the frame index, frozen when paused
    const sway = vm.motionKind === 'moving' ? Math.sin(vm.frame * 0.9) * H * 0.04 : 0

    ctx.save()
    ctx.translate(cx, groundY)
    ctx.rotate(shape.stoop)
    ctx.fillStyle = 'rgba(30,28,26,0.82)'

    // legs
    ctx.beginPath()
    ctx.moveTo(-H * 0.1, 0)
    ctx.lineTo(-H * 0.02 + sway * 0.4, -H * 0.45)
    ctx.lineTo(H * 0.02 + sway * 0.4, -H * 0.45)
    ctx.lineTo(H * 0.1 + sway, 0)
    ctx.lineTo(H * 0.04 + sway, 0)
    ctx.lineTo(0, -H * 0.3)
    ctx.lineTo(-H * 0.05, 0)
    ctx.closePath()
    ctx.fill()
    // torso
    ctx.beginPath()
    ctx.moveTo(-H * 0.13, -H * 0.42)
    ctx.quadraticCurveTo(-H * 0.16, -H * 0.72, -H * 0.07, -H * 0.78)
    ctx.lineTo(H * 0.07 + sway * 0.2, -H * 0.78)
    ctx.quadraticCurveTo(H * 0.16, -H * 0.7, H * 0.12, -H * 0.42)
    ctx.closePath()
    ctx.fill()
    // head
    const r = shape.headR * H
    ctx.beginPath()
    ctx.arc(sway * 0.15, -H * 0.78 - r * 0.9, r, 0, Math.PI * 2)
    ctx.fill()
    ctx.restore()
  }
}
