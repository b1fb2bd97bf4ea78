"""TCP vec-env protocol server: one session per connection, lock-step.

Every received line produces exactly one reply line; malformed input
produces an error line and never tears down the server.  Sessions share
nothing but immutable assets, so connections are fully isolated.
"""

from __future__ import annotations

import asyncio
import logging

from .protocol import ERR_BAD_STATE, ProtocolError, encode, parse_command
from .sessions import SessionState

log = logging.getLogger(__name__)

MAX_LINE = 64 * 1024 * 1024


class VecEnvServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 5555):
        self.host = host
        self.port = port
        self._server: asyncio.AbstractServer | None = None

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle, self.host, self.port, limit=MAX_LINE)
        addr = self._server.sockets[0].getsockname()
        log.info("vec-env protocol listening on %s:%s", *addr[:2])

    @property
    def bound_port(self) -> int:
        assert self._server is not None
        return self._server.sockets[0].getsockname()[1]

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
        session = SessionState()
        peer = writer.get_extra_info("peername")
        log.info("session %d from %s", session.session_id, peer)
        try:
            while not session.closed:
                try:
                    line = await reader.readline()
                except (asyncio.LimitOverrunError, ValueError):
                    writer.write(encode(ProtocolError(
                        ERR_BAD_STATE, "line too long").reply()))
                    await writer.drain()
                    break
                if not line:
                    break
                if not line.strip():
                    continue
                reply = await asyncio.get_running_loop().run_in_executor(
                    None, self._dispatch, session, line)
                if reply is None:
                    break
                writer.write(encode(reply))
                await writer.drain()
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionResetError, BrokenPipeError):
                pass
            log.info("session %d ended after %s", session.session_id, session.stats)

    @staticmethod
    def _dispatch(session: SessionState, line: bytes) -> dict | None:
        try:
            command = parse_command(line)
            return session.handle(command)
        except ProtocolError as exc:
            return exc.reply()
        except Exception as exc:  # never crash the connection
            log.exception("session %d internal error", session.session_id)
            return ProtocolError(ERR_BAD_STATE, f"internal error: {exc}").reply()


def run_server(host: str, port: int) -> None:
    """Blocking entry point used by the CLI."""
    async def main() -> None:
        server = VecEnvServer(host, port)
        await server.start()
        await server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
