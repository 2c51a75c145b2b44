from .image import ImageGuidance, embed_image, image_edit_key, request_image_edit
from .parts import (
    GRANULARITIES,
    choose_granularity,
    kmeans_segmentation,
    multi_granularity_segment,
    part_selection_key,
    request_part_selection,
    request_segmentation,
    segmentation_key,
)
from .providers import FixtureRecorder, Provider, ProviderConfig, ProviderMode, RecordingProvider, request_hash
from .text import GuidanceBundle, embed_text, parse_bundle, request_text_guidance, text_guidance_key
from .views import (
    View,
    ViewSet,
    canonical_views,
    heuristic_best_view,
    render_views,
    select_best_view,
    view_selection_key,
)

__all__ = [
    "GRANULARITIES",
    "FixtureRecorder",
    "GuidanceBundle",
    "ImageGuidance",
    "Provider",
    "ProviderConfig",
    "ProviderMode",
    "RecordingProvider",
    "View",
    "ViewSet",
    "canonical_views",
    "choose_granularity",
    "embed_image",
    "embed_text",
    "heuristic_best_view",
    "image_edit_key",
    "kmeans_segmentation",
    "multi_granularity_segment",
    "parse_bundle",
    "part_selection_key",
    "render_views",
    "request_hash",
    "request_image_edit",
    "request_part_selection",
    "request_segmentation",
    "segmentation_key",
    "select_best_view",
    "text_guidance_key",
    "view_selection_key",
]
