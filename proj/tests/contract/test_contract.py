"""Black-box checks of the wtt CLI, its file formats and the NDJSON protocol."""

import csv
import json
import os
import re
import socket
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

ROOT = Path(__file__).resolve().parents[2]
WTT = os.environ.get("WTT_BIN", str(ROOT / "build" / "tools" / "wtt"))
SCENARIOS = ROOT / "scenarios"
SCHEMA = ROOT / "schema"

SMALL = {
    "seed": 3,
    "steps": 40,
    "metrics_every": 10,
    "grid": {"nx": 48, "ny": 27},
    "seeding": {"n_particles": 300, "n_storms": 3, "storm_spawn_period": 5},
    "mode": {"mode": "ice_age"},
    "layout": {"blocks": [{"class": "high", "x": 20, "y": 13, "rot": 0.4}]},
    "serve": {"fps": 60},
}

HEADER = ["step", "mean_speed", "max_divergence", "storm_hits", "mean_storm_lat", "lgm_coverage"]


def load_schema(name):
    with open(SCHEMA / name) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    return schema


PROTOCOL = load_schema("protocol.schema.json")
SCENARIO = load_schema("scenario.schema.json")


def validator(defn):
    return jsonschema.Draft202012Validator({"$ref": f"#/$defs/{defn}", "$defs": PROTOCOL["$defs"]})


FRAME = validator("frame")
SERVER_MSG = validator("server_message")
CLIENT_MSG = validator("client_message")


def run(*args, timeout=300):
    return subprocess.run([WTT, *args], capture_output=True, text=True, timeout=timeout)


class Workdir(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def scenario(self, doc=None, name="s.json"):
        p = self.dir / name
        p.write_text(json.dumps(SMALL if doc is None else doc))
        return p


class ScenarioFiles(Workdir):
    def test_bundled_scenarios_match_schema(self):
        files = sorted(SCENARIOS.glob("*.json"))
        self.assertGreaterEqual(len(files), 4)
        for f in files:
            doc = json.loads(f.read_text())
            if "blocks" in doc and len(doc) == 1:
                jsonschema.validate(doc, {"$ref": "#/$defs/layout", "$defs": SCENARIO["$defs"]})
                continue
            with self.subTest(f.name):
                jsonschema.validate(doc, SCENARIO)
                r = run("run", "--config", str(f), "--steps", "0")
                self.assertEqual(r.returncode, 0, r.stderr)

    def test_schema_and_parser_agree_on_rejections(self):
        bad = [
            ({**SMALL, "grid": {"nx": 48, "ny": 27, "depth": 2}}, "grid.depth"),
            ({**SMALL, "engine": "spectral"}, "engine"),
            ({**SMALL, "layout": {"blocks": [{"class": "lava", "x": 1, "y": 1}]}}, "layout.blocks[0].class"),
            ({**SMALL, "random_blocks": {"count": 2}}, "layout"),
            ({**SMALL, "seeding": {"n_particles": "many"}}, "seeding.n_particles"),
        ]
        for doc, field in bad:
            with self.subTest(field):
                with self.assertRaises(jsonschema.ValidationError):
                    jsonschema.validate(doc, SCENARIO)
                r = run("run", "--config", str(self.scenario(doc)))
                self.assertEqual(r.returncode, 2)
                self.assertIn(field, r.stderr)

    def test_missing_config_file(self):
        r = run("run", "--config", str(self.dir / "absent.json"))
        self.assertNotEqual(r.returncode, 0)
        self.assertIn("absent.json", r.stderr)


class RunArtifacts(Workdir):
    def test_zero_steps_writes_header_only(self):
        out = self.dir / "m.csv"
        r = run("run", "--config", str(self.scenario()), "--steps", "0", "--metrics", str(out))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(out.read_text(), ",".join(HEADER) + "\n")

    def test_artifacts(self):
        m, ev, snap, frames = self.dir / "m.csv", self.dir / "e.jsonl", self.dir / "snap.json", self.dir / "frames"
        r = run("run", "--config", str(self.scenario()), "--metrics", str(m), "--events", str(ev),
                "--snapshot", str(snap), "--frames", str(frames), "--every", "20")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertRegex(r.stdout, r"^steps=40 ")

        lines = m.read_text().splitlines()
        self.assertEqual(lines[0].split(","), HEADER)
        self.assertTrue(lines[-1].startswith("# summary,steps=40,"))
        rows = list(csv.reader(lines[1:-1]))
        self.assertEqual([int(r[0]) for r in rows], [10, 20, 30, 40])
        for row in rows:
            self.assertEqual(len(row), len(HEADER))
            float(row[1]), float(row[2]), int(row[3])

        for line in ev.read_text().splitlines():
            e = json.loads(line)
            self.assertEqual(set(e), {"step", "kind", "detail"})

        FRAME.validate(json.loads(snap.read_text()))

        sums = (frames / "checksums.txt").read_text().split()
        self.assertEqual(sums[0::2], ["frame_000020.png", "frame_000040.png"])
        for name, digest in zip(sums[0::2], sums[1::2]):
            self.assertRegex(digest, r"^[0-9a-f]{16}$")
            self.assertEqual((frames / name).read_bytes()[:8], b"\x89PNG\r\n\x1a\n")

        out = self.dir / "again.png"
        r = run("render", "--snapshot", str(snap), "--out", str(out))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(r.stdout.split(), [str(out), sums[-1]])

    def test_repulse_engine_writes_nan_divergence(self):
        m = self.dir / "m.csv"
        r = run("run", "--config", str(self.scenario()), "--engine", "repulse", "--metrics", str(m), "--no-summary")
        self.assertEqual(r.returncode, 0, r.stderr)
        lines = m.read_text().splitlines()
        self.assertFalse(lines[-1].startswith("#"))
        self.assertTrue(all(row.split(",")[2] == "nan" for row in lines[1:]))


class Served:
    def __init__(self, config, max_frames):
        self.proc = subprocess.Popen([WTT, "serve", "--config", str(config), "--port", "0",
                                      "--max-frames", str(max_frames)],
                                     stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        line = self.proc.stdout.readline()
        m = re.match(r"listening on ([\d.]+):(\d+)", line)
        if not m:
            self.proc.kill()
            raise AssertionError(f"unexpected banner {line!r}: {self.proc.stderr.read()}")
        self.addr = (m.group(1), int(m.group(2)))

    def connect(self):
        s = socket.create_connection(self.addr, timeout=10)
        return s, s.makefile("r", encoding="utf-8")

    def close(self):
        try:
            self.proc.wait(timeout=60)
        finally:
            if self.proc.poll() is None:
                self.proc.kill()
                self.proc.wait()
            self.proc.stdout.close()
            self.proc.stderr.close()


class Protocol(Workdir):
    def test_frames_and_commands(self):
        srv = Served(self.scenario(), 90)
        try:
            sock, rd = srv.connect()
            first = json.loads(rd.readline())
            SERVER_MSG.validate(first)
            FRAME.validate(first)

            layout = {"t": "layout", "blocks": [{"class": "ice", "x": 30, "y": 9, "rot": 0.1, "w": 8, "h": 6}]}
            mode = {"t": "mode", "mode": "moving_mountains", "seed": 11}
            for msg in (layout, mode):
                CLIENT_MSG.validate(msg)
                sock.sendall((json.dumps(msg) + "\n").encode())

            seen_digest, seen_mode, steps = False, False, []
            for _ in range(30):
                line = rd.readline()
                if not line:
                    break
                f = json.loads(line)
                FRAME.validate(f)
                steps.append(f["step"])
                seen_digest |= f["obstacle_digest"] != first["obstacle_digest"]
                seen_mode |= f["mode"] == "moving_mountains" and f["targets"]["nonameland"] is not None
            self.assertTrue(seen_digest)
            self.assertTrue(seen_mode)
            self.assertEqual(steps, sorted(set(steps)))
            rd.close()
            sock.close()
        finally:
            srv.close()
        self.assertEqual(srv.proc.returncode, 0)

    def test_malformed_message_gets_error_and_close(self):
        srv = Served(self.scenario(), 120)
        try:
            other, other_rd = srv.connect()
            sock, rd = srv.connect()
            json.loads(rd.readline())
            sock.sendall(b'{"t": "mode", "mode": "ice_age"}\n')
            msgs = [json.loads(line) for line in rd]
            self.assertTrue(msgs)
            self.assertEqual(msgs[-1]["t"], "error")
            SERVER_MSG.validate(msgs[-1])
            self.assertIn("seed", msgs[-1]["msg"])
            for _ in range(5):
                FRAME.validate(json.loads(other_rd.readline()))
            for f in (rd, sock, other_rd, other):
                f.close()
        finally:
            srv.close()

    def test_rejected_client_messages_fail_the_schema(self):
        for msg in ({"t": "mode", "mode": "ice_age"},
                    {"t": "layout", "blocks": [{"class": "ice"}]},
                    {"t": "layout", "blocks": [], "extra": 1},
                    {"t": "teleport"}):
            with self.subTest(msg=msg), self.assertRaises(jsonschema.ValidationError):
                CLIENT_MSG.validate(msg)


if __name__ == "__main__":
    if len(sys.argv) > 1 and not sys.argv[1].startswith("-"):
        WTT = sys.argv.pop(1)
    unittest.main(verbosity=2)
