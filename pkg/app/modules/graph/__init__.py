# Graph Module: edge-list ingestion, components, Laplacians and grounded systems
