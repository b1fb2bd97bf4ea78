"""Wire protocol conformance against a live TCP server."""

import asyncio
import json
import socket
import threading
import time

import numpy as np
import pytest

from ragmark.harness.tcp_server import VecEnvServer


class ServerHandle:
    def __init__(self):
        self.loop = asyncio.new_event_loop()
        self.server = VecEnvServer("127.0.0.1", 0)
        self.thread = threading.Thread(target=self._run, daemon=True)
        self.started = threading.Event()
        self.thread.start()
        assert self.started.wait(10)

    def _run(self):
        asyncio.set_event_loop(self.loop)
        self.loop.run_until_complete(self.server.start())
        self.port = self.server.bound_port
        self.started.set()
        self.loop.run_forever()

    def stop(self):
        asyncio.run_coroutine_threadsafe(self.server.close(), self.loop).result(5)
        self.loop.call_soon_threadsafe(self.loop.stop)
        self.thread.join(5)


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=30)
        self.fh = self.sock.makefile("rwb")

    def send_line(self, raw: bytes) -> dict:
        self.fh.write(raw + b"\n")
        self.fh.flush()
        line = self.fh.readline()
        assert line, "server closed unexpectedly"
        return json.loads(line)

    def send(self, obj) -> dict:
        return self.send_line(json.dumps(obj).encode())

    def close(self):
        try:
            self.fh.close()
            self.sock.close()
        except OSError:
            pass


@pytest.fixture(scope="module")
def server():
    handle = ServerHandle()
    yield handle
    handle.stop()


def _hello(client, env="hopper", agents=2, **kw):
    return client.send({"cmd": "hello", "env": env, "agents": agents,
                        "seed": 0, **kw})


class TestHandshake:
    def test_hello_reports_dims(self, server):
        c = Client(server.port)
        spec = _hello(c, agents=16)
        assert spec == {"type": "spec", "obs_dim": 31, "act_dim": 4, "agents": 16}
        c.close()

    def test_unknown_env(self, server):
        c = Client(server.port)
        r = _hello(c, env="quadcopter")
        assert r["type"] == "error" and r["code"] == "unknown_env"
        c.close()

    def test_second_hello_rejected(self, server):
        c = Client(server.port)
        _hello(c)
        r = _hello(c)
        assert r["code"] == "bad_state"
        c.close()


class TestOrdering:
    def test_step_before_reset(self, server):
        c = Client(server.port)
        _hello(c)
        r = c.send({"cmd": "step", "actions": [[0, 0, 0, 0]] * 2})
        assert r["type"] == "error" and r["code"] == "bad_state"
        c.close()

    def test_reset_before_hello(self, server):
        c = Client(server.port)
        r = c.send({"cmd": "reset"})
        assert r["code"] == "bad_state"
        c.close()


class TestMalformedInput:
    def test_unparseable_line(self, server):
        c = Client(server.port)
        r = c.send_line(b"this is not json")
        assert r["type"] == "error" and r["code"] == "bad_json"
        # session survives
        spec = _hello(c)
        assert spec["type"] == "spec"
        c.close()

    def test_non_object_json(self, server):
        c = Client(server.port)
        r = c.send_line(b"[1,2,3]")
        assert r["code"] == "bad_json"
        c.close()

    def test_unknown_cmd(self, server):
        c = Client(server.port)
        r = c.send({"cmd": "jump"})
        assert r["code"] == "bad_json"
        c.close()

    def test_wrong_action_shape_session_survives(self, server):
        c = Client(server.port)
        _hello(c)
        c.send({"cmd": "reset"})
        r = c.send({"cmd": "step", "actions": [[0, 0, 0]] * 2})
        assert r["type"] == "error" and r["code"] == "bad_shape"
        r = c.send({"cmd": "step", "actions": [[0, 0, 0, 0]] * 2})
        assert r["type"] == "transition"
        c.close()

    def test_non_finite_actions(self, server):
        c = Client(server.port)
        _hello(c)
        c.send({"cmd": "reset"})
        r = c.send_line(
            b'{"cmd":"step","actions":[[0,0,0,NaN],[0,0,0,0]]}')
        assert r["type"] == "error"
        c.close()

    def test_bad_agent_count(self, server):
        c = Client(server.port)
        r = _hello(c, agents=0)
        assert r["code"] == "bad_shape"
        c.close()


class TestTransitions:
    def test_reset_then_steps(self, server):
        c = Client(server.port)
        _hello(c, agents=3)
        obs = c.send({"cmd": "reset", "seed": 7})
        assert obs["type"] == "obs"
        assert len(obs["obs"]) == 3 and len(obs["obs"][0]) == 31
        for _ in range(5):
            tr = c.send({"cmd": "step", "actions": [[0.1, -0.2, 0.0, 0.3]] * 3})
            assert tr["type"] == "transition"
            assert len(tr["rew"]) == 3
            assert all(s in ("running", "terminated", "truncated")
                       for s in tr["status"])
            assert len(tr["reset"]) == 3
        c.close()

    def test_goal_without_controller(self, server):
        c = Client(server.port)
        _hello(c)
        r = c.send({"cmd": "goal", "value": "left"})
        assert r["code"] == "bad_state"
        c.close()

    def test_goal_with_controller(self, server):
        c = Client(server.port)
        _hello(c, wrappers=["controller:discrete"])
        c.send({"cmd": "reset"})
        r = c.send({"cmd": "goal", "value": "left"})
        assert r["type"] == "goal_ack"
        r = c.send({"cmd": "goal", "value": "sideways"})
        assert r["type"] == "error" and r["code"] == "bad_shape"
        c.close()

    def test_close_ends_session(self, server):
        c = Client(server.port)
        _hello(c)
        c.fh.write(b'{"cmd":"close"}\n')
        c.fh.flush()
        assert c.fh.readline() == b""
        c.close()


class TestIsolationAndDeterminism:
    def test_same_seeds_identical_across_sessions(self, server):
        def run():
            c = Client(server.port)
            _hello(c, agents=2, seed=5)
            c.send({"cmd": "reset", "seed": 5})
            rows = []
            for k in range(10):
                tr = c.send({"cmd": "step",
                             "actions": [[0.1 * k, -0.1, 0.2, 0.0]] * 2})
                rows.append((tuple(map(tuple, tr["obs"])), tuple(tr["rew"])))
            c.close()
            return rows

        assert run() == run()

    def test_distinct_seeds_distinct_trajectories(self, server):
        c1, c2 = Client(server.port), Client(server.port)
        _hello(c1, agents=1, seed=1)
        _hello(c2, agents=1, seed=2)
        o1 = c1.send({"cmd": "reset", "seed": 1})
        o2 = c2.send({"cmd": "reset", "seed": 2})
        assert o1["obs"] != o2["obs"]
        c1.close()
        c2.close()

    def test_concurrent_sessions_do_not_interfere(self, server):
        c1, c2 = Client(server.port), Client(server.port)
        _hello(c1, agents=1, seed=3)
        _hello(c2, agents=1, seed=3)
        c1.send({"cmd": "reset", "seed": 3})
        c2.send({"cmd": "reset", "seed": 3})
        # interleave stepping; identical seeds must stay identical
        for _ in range(5):
            t1 = c1.send({"cmd": "step", "actions": [[0.2, 0.1, -0.1, 0.0]]})
            t2 = c2.send({"cmd": "step", "actions": [[0.2, 0.1, -0.1, 0.0]]})
            assert t1["obs"] == t2["obs"]
        c1.close()
        c2.close()


def test_loopback_throughput_smoke(server):
    """Full conformance bound lives in the acceptance suite; this is a
    fast sanity floor."""
    c = Client(server.port)
    _hello(c, agents=16)
    c.send({"cmd": "reset"})
    actions = [[0.0, 0.0, 0.0, 0.0]] * 16
    payload = json.dumps({"cmd": "step", "actions": actions}).encode()
    n = 50
    t0 = time.perf_counter()
    for _ in range(n):
        r = c.send_line(payload)
        assert r["type"] == "transition"
    rate = n / (time.perf_counter() - t0)
    c.close()
    assert rate > 20
