"""Exception types shared across the pipeline."""


class DegenerateMaskError(ValueError):
    """A field-of-view mask with no true pixels."""


class DegenerateDataError(ValueError):
    """Clustering input that cannot support the requested number of clusters."""


class ImageReadError(OSError):
    """An image file that is missing, truncated or undecodable."""


class StageError(RuntimeError):
    """Failure inside one pipeline stage, tagged with stage name and image id."""

    def __init__(self, stage, image_id, cause):
        self.stage = stage
        self.image_id = image_id
        self.cause = cause
        super().__init__(f"[{image_id}] stage '{stage}' failed: {cause}")
