// Runtime endpoint configuration; override before loading the app bundle.
window.ACINO_ENDPOINT = window.ACINO_ENDPOINT || "http://127.0.0.1:8088";
