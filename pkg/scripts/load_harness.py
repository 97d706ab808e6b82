#!/usr/bin/env python3
"""Load harness: N concurrent sessions streaming samples at a fixed rate.

Starts the bridge in-process on a free port, opens real WebSocket
connections, paces each session at the sample rate for the duration and
verifies that nothing is dropped: per-connection sequence numbers must be
gap-free and every sample must be answered with its state message.

Default shape is the exhibition soak: 50 sessions at 20 Hz for 60 s.

    python scripts/load_harness.py
    python scripts/load_harness.py --sessions 10 --duration 10 --no-pace
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import json
import socket
import statistics
import sys
import threading
import time

import uvicorn
import websockets

from lifeloop.bridge import PROTOCOL_VERSION, create_app
from lifeloop.dsl import canonical_graph
from lifeloop.engine import EngineConfig


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class ServerThread(threading.Thread):
    def __init__(self, port: int):
        super().__init__(daemon=True)
        app = create_app(canonical_graph(), EngineConfig())
        self.server = uvicorn.Server(uvicorn.Config(
            app, host="127.0.0.1", port=port, log_level="error"))

    def run(self) -> None:
        self.server.run()

    def stop(self) -> None:
        self.server.should_exit = True


async def run_session(url: str, idx: int, duration: float, rate: float,
                      pace: bool) -> dict:
    n = round(duration * rate)
    speed = 9.0 + (idx % 7)  # desynchronize the sessions a little
    seqs: list[int] = []
    latencies: list[float] = []
    directives = 0
    async with websockets.connect(url, max_queue=None) as ws:
        await ws.send(json.dumps({"seq": 1, "type": "hello", "v": PROTOCOL_VERSION}))
        msg = json.loads(await ws.recv())
        assert msg["type"] == "welcome", msg
        seqs.append(msg["seq"])
        start = time.perf_counter()
        for k in range(1, n + 1):
            t = k / rate
            if pace:
                lag = start + t - time.perf_counter()
                if lag > 0:
                    await asyncio.sleep(lag)
            sent = time.perf_counter()
            await ws.send(json.dumps({
                "seq": k + 1, "type": "sample",
                "t": t, "angle": (speed * t) % 360.0}))
            while True:
                msg = json.loads(await ws.recv())
                seqs.append(msg["seq"])
                if msg["type"] == "directive":
                    directives += 1
                elif msg["type"] == "state":
                    latencies.append(time.perf_counter() - sent)
                    break
                elif msg["type"] == "heartbeat":
                    continue
                else:
                    raise AssertionError(f"session {idx}: unexpected {msg}")
    gaps = sum(b != a + 1 for a, b in zip(seqs, seqs[1:]))
    return {"session": idx, "samples": n, "directives": directives,
            "seq_gaps": gaps, "answered": len(latencies),
            "p50_ms": statistics.median(latencies) * 1000.0}


async def run_load(sessions: int, duration: float, rate: float, pace: bool,
                   port: int) -> int:
    url = f"ws://127.0.0.1:{port}/ws"
    results = await asyncio.gather(*[
        run_session(url, i, duration, rate, pace) for i in range(sessions)])
    dropped = sum(r["samples"] - r["answered"] for r in results)
    gaps = sum(r["seq_gaps"] for r in results)
    p50 = statistics.median(r["p50_ms"] for r in results)
    total_dirs = sum(r["directives"] for r in results)
    print(f"sessions={sessions} rate={rate}Hz duration={duration}s pace={pace}")
    print(f"answered={sum(r['answered'] for r in results)} dropped={dropped} "
          f"seq_gaps={gaps} directives={total_dirs} median_rtt={p50:.2f}ms")
    if dropped or gaps:
        print("FAIL: messages dropped or sequence gaps observed")
        return 1
    print("PASS: no dropped messages, no sequence gaps")
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sessions", type=int, default=50)
    parser.add_argument("--duration", type=float, default=60.0)
    parser.add_argument("--rate", type=float, default=20.0)
    parser.add_argument("--no-pace", action="store_true",
                        help="send as fast as possible instead of real time")
    args = parser.parse_args()

    port = free_port()
    server = ServerThread(port)
    server.start()
    deadline = time.time() + 10
    while time.time() < deadline and not server.server.started:
        time.sleep(0.05)
    if not server.server.started:
        print("server failed to start", file=sys.stderr)
        return 2
    try:
        return asyncio.run(run_load(args.sessions, args.duration, args.rate,
                                    not args.no_pace, port))
    finally:
        server.stop()
        with contextlib.suppress(Exception):
            server.join(timeout=5)


if __name__ == "__main__":
    sys.exit(main())
