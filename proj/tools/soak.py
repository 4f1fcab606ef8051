#!/usr/bin/env python3
"""Runs `wtt serve` and hammers it with random layout and mode commands.

Fails if the server exits, stops streaming, or sends anything but frames.
"""

import argparse
import json
import random
import re
import socket
import subprocess
import sys
import time


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--wtt", required=True, help="path to the wtt binary")
    ap.add_argument("--config", required=True)
    ap.add_argument("--duration", type=float, default=3600.0, help="seconds")
    ap.add_argument("--period", type=float, default=0.5, help="seconds between commands")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    proc = subprocess.Popen([args.wtt, "serve", "--config", args.config, "--port", "0"],
                            stdout=subprocess.PIPE, text=True)
    banner = proc.stdout.readline()
    m = re.match(r"listening on ([\d.]+):(\d+)", banner)
    if not m:
        print(f"bad banner: {banner!r}", file=sys.stderr)
        proc.kill()
        return 1
    sock = socket.create_connection((m.group(1), int(m.group(2))), timeout=10)
    rd = sock.makefile("r", encoding="utf-8")
    grid = json.loads(rd.readline())["grid"]

    start = time.monotonic()
    next_cmd = start
    frames = commands = reconnects = 0
    last_step = -1
    status = 0
    try:
        while time.monotonic() - start < args.duration:
            if proc.poll() is not None:
                raise RuntimeError(f"server exited with {proc.returncode}")
            line = rd.readline()
            if not line:
                raise RuntimeError("stream closed")
            msg = json.loads(line)
            if msg.get("t") != "frame":
                raise RuntimeError(f"unexpected message {line[:200]}")
            if msg["step"] <= last_step:
                raise RuntimeError(f"step went from {last_step} to {msg['step']}")
            last_step = msg["step"]
            frames += 1
            now = time.monotonic()
            if now >= next_cmd:
                next_cmd = now + args.period
                commands += 1
                if rng.random() < 0.1:
                    cmd = {"t": "mode", "mode": rng.choice(["ice_age", "moving_mountains"]),
                           "seed": rng.randrange(1 << 31)}
                else:
                    cmd = {"t": "layout", "blocks": [
                        {"class": rng.choice(["low", "high", "ice"]),
                         "x": rng.uniform(0, grid["nx"]), "y": rng.uniform(0, grid["ny"]),
                         "rot": rng.uniform(0, 3.1416),
                         "w": rng.uniform(4, 30), "h": rng.uniform(4, 24)}
                        for _ in range(rng.randrange(0, 13))]}
                sock.sendall((json.dumps(cmd) + "\n").encode())
            if rng.random() < 0.002:
                # Drop and re-open the connection now and then.
                rd.close()
                sock.close()
                sock = socket.create_connection((m.group(1), int(m.group(2))), timeout=10)
                rd = sock.makefile("r", encoding="utf-8")
                reconnects += 1
    except Exception as e:  # noqa: BLE001
        print(f"FAIL: {e}", file=sys.stderr)
        status = 1
    finally:
        rd.close()
        sock.close()
        alive = proc.poll() is None
        proc.terminate()
        proc.wait(timeout=30)
        proc.stdout.close()
    elapsed = time.monotonic() - start
    print(f"soak {elapsed:.0f} s: {frames} frames, {commands} commands, {reconnects} reconnects, "
          f"last step {last_step}, server {'alive' if alive else 'dead'}")
    return status if alive else 1


if __name__ == "__main__":
    sys.exit(main())
