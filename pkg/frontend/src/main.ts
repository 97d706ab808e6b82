// Simulator bootstrap: wire drag physics, the 20 Hz sampler, the session
// client and the renderer to the page. Configuration via query parameters:
//   ?server=ws://host:port/ws   (default ws://127.0.0.1:7360/ws)
//   &script=still_walking       (optional script selection)
//   &user=<id>                  (optional visitor identity)

import { SessionClient } from './client.js'
import { DragPhysics } from './physics.js'
import { DEFAULT_SERVER } from './protocol.js'
import { Renderer } from './render.js'
import { SAMPLE_RATE_HZ, SampleScheduler } from './sampler.js'
import { ViewModel, applyServerMsg, initialViewModel } from './viewmodel.js'

const params = new URLSearchParams(location.search)
const serverUrl = params.get('server') ?? DEFAULT_SERVER
const script = params.get('script') ?? undefined
const userId = params.get('user') ?? undefined

const canvas = document.getElementById('scene') as HTMLCanvasElement
const banner = document.getElementById('banner') as HTMLDivElement
const hintEl = document.getElementById('hint') as HTMLDivElement
const errorEl = document.getElementById('error-chip') as HTMLDivElement
const hud = document.getElementById('hud') as HTMLDivElement
const pathEl = document.getElementById('path') as HTMLDivElement
const distanceSlider = document.getElementById('distance') as HTMLInputElement
const distanceOut = document.getElementById('distance-value') as HTMLSpanElement

const physics = new DragPhysics()
const sampler = new SampleScheduler(physics, userId)
const renderer = new Renderer(canvas)
let vm: ViewModel = initialViewModel()
let client: SessionClient | null = null
let sampleTimer: number | null = null

function setBanner(text: string | null): void {
  banner.textContent = text ?? ''
  banner.style.display = text ? 'block' : 'none'
}

function chip(label: string, value: string): string {
  return `<span class="chip"><em>${label}</em> ${value}</span>`
}

function renderHud(): void {
  const age = vm.age === null ? '-' : vm.age.toFixed(1)
  hud.innerHTML = [
    chip('stage', vm.stage ?? '-'),
    chip('age', age),
    chip('lap', String(vm.lap)),
    chip('clue', vm.clue ?? '-'),
    chip('shot', vm.shot ?? '-'),
    chip('angle', vm.horizontal ?? '-'),
    chip('move', vm.movement ? `${vm.movement} ${vm.movementSpeed.toFixed(1)}` : '-'),
    chip('form', vm.form ?? '-'),
    chip('clip', vm.clip ? `${vm.clip}#${vm.frame}` : '-'),
    chip('mode', vm.mode ?? '-'),
  ].join('')
  pathEl.textContent = vm.path.map(([stage, guard]) => `${stage}:${guard}`).join('  ->  ')
  hintEl.textContent = vm.hint ?? ''
  hintEl.style.display = vm.hint ? 'block' : 'none'
  errorEl.textContent = vm.errorChip ?? ''
  errorEl.style.display = vm.errorChip ? 'block' : 'none'
  distanceOut.textContent = `${Number(distanceSlider.value).toFixed(2)} m`
}

function startSampling(): void {
  if (sampleTimer !== null) return
  sampler.reset()
  sampleTimer = window.setInterval(() => {
    if (!client?.isConnected) return
    client.send(sampler.next(Number(distanceSlider.value)))
  }, 1000 / SAMPLE_RATE_HZ)
}

function stopSampling(): void {
  if (sampleTimer !== null) {
    clearInterval(sampleTimer)
    sampleTimer = null
  }
}

async function connect(): Promise<void> {
  setBanner('connecting...')
  client = new SessionClient(serverUrl, (url) => new WebSocket(url), script)
  client.onmessage = (msg) => {
    vm = applyServerMsg(vm, msg)
    if (msg.type === 'welcome') {
      setBanner(null)
      startSampling()
    }
    renderHud()
  }
  client.ondisconnect = () => {
    stopSampling()
    setBanner('connection lost - reconnecting...')
    window.setTimeout(() => {
      connect().catch(() => setBanner('server unreachable - retrying...'))
    }, 2000)
  }
  await client.connect()
}

// pointer -> physics
canvas.addEventListener('pointerdown', (ev) => {
  canvas.setPointerCapture(ev.pointerId)
  physics.pointerDown(ev.clientX, performance.now())
})
canvas.addEventListener('pointermove', (ev) => physics.pointerMove(ev.clientX, performance.now()))
canvas.addEventListener('pointerup', () => physics.pointerUp())
canvas.addEventListener('pointercancel', () => physics.pointerUp())

let lastFrame = performance.now()
function frame(now: number): void {
  const dt = Math.min(0.1, (now - lastFrame) / 1000)
  lastFrame = now
  renderer.draw(vm, dt)
  requestAnimationFrame(frame)
}
requestAnimationFrame(frame)

connect().catch(() => setBanner('server unreachable - retrying...'))
