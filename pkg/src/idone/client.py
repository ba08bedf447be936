"""Thin HTTP client for the experiment service.

With a base URL it talks to a running server; without one it serves the
FastAPI app in-process over the same HTTP surface, so the CLI works with or
without a separate daemon.
"""

from __future__ import annotations

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, detail):
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class ServiceClient:
    def __init__(self, base_url: str | None = None, timeout: float | None = None):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)
        else:
            import warnings

            with warnings.catch_warnings():
                # some starlette builds warn about their httpx test shim
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def close(self):
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc):
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        return self._unwrap(response)

    def _get(self, path: str) -> dict | list:
        return self._unwrap(self._client.get(path))

    @staticmethod
    def _unwrap(response: httpx.Response):
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ServiceError(response.status_code, detail)
        return response.json()

    def health(self) -> dict:
        return self._get("/health")

    def problems(self) -> list:
        return self._get("/problems")

    def run_experiment(self, request: dict) -> dict:
        return self._post("/experiments/run", request)

    def summarize(self, trace_dir: str) -> dict:
        return self._post("/summaries", {"trace_dir": trace_dir})

    def dump_model(self, request: dict) -> dict:
        return self._post("/models/dump", request)

    def validate_instance(self, path: str | None = None, text: str | None = None) -> dict:
        return self._post("/instances/validate", {"path": path, "text": text})
