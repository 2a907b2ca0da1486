"""HTTP text-encoder sidecar and embedding-cache exporter."""
