"""Scripts package for generating experiment inputs."""
