from .manifest import RunSink, load_manifest, save_run_metadata
from .protocol import ProtocolError, encode, parse_command
from .sessions import SessionState
from .tcp_server import VecEnvServer

__all__ = ["RunSink", "load_manifest", "save_run_metadata", "ProtocolError",
           "encode", "parse_command", "SessionState", "VecEnvServer"]
