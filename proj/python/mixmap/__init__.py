"""Python access to the mixmap engine."""

import json as _json

from ._mixmap import *  # noqa: F401,F403
from ._mixmap import Api as _Api


class Client:
    """Calls the JSON API in-process and decodes responses."""

    def __init__(self, engine, page_size=10000):
        self._api = _Api(engine, page_size)

    def request(self, method, path, body=None, **query):
        payload = "" if body is None else _json.dumps(body)
        status, text = self._api.handle(method, path, payload, {k: str(v) for k, v in query.items()})
        return status, _json.loads(text)

    def get(self, path, **query):
        return self.request("GET", path, None, **query)

    def post(self, path, body=None):
        return self.request("POST", path, body or {})
