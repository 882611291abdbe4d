from ..vm import PerceptionBackend
from .cache import CachedBackend, SerializedBackend, cache_wrap
from .mockserver import MockDetectorServer
from .oracle import OracleBackend, oracle_detect, oracle_read_text
from .remote import RemoteBackend, RemoteConfig, remote_detect
from .scene import SceneDocument, SceneObject, SceneRelation, load_corpus, load_scene, scene_from_dict
from .wire import DetectorWireRequest, DetectorWireResponse


class FailingBackend:
    """Backend whose every call raises; models a dead detector."""

    def __init__(self, exc: Exception | None = None, has_ocr: bool = True):
        self.exc = exc or ConnectionError("backend unavailable")
        self.has_ocr = has_ocr

    def detect(self, image_id, query, threshold=0.0):
        raise self.exc

    def read_text(self, image_id, region):
        raise self.exc


__all__ = [
    "CachedBackend", "DetectorWireRequest", "DetectorWireResponse", "FailingBackend",
    "MockDetectorServer", "OracleBackend", "PerceptionBackend", "RemoteBackend", "RemoteConfig",
    "SceneDocument", "SceneObject", "SceneRelation", "SerializedBackend", "cache_wrap",
    "load_corpus", "load_scene", "oracle_detect", "oracle_read_text", "remote_detect", "scene_from_dict",
]
