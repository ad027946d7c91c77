"""Defect taxonomy and prompt catalog for question-driven defect detectors.

Six coarse defect families cover what goes wrong when a background scene is
generated around a reference product shot. Each family carries one or more
detailed defects, and each detailed defect has a question template with
``{object_class}`` / ``{product_type}`` placeholders. Templates are stored
verbatim as transcribed, including the known wording gap in the
matching_location question ("In which locations is the normally found?").

The canonical catalog has exactly 13 detailed defects. The rich_background
question is shipped as a supplementary template: it was a later addition to
stop vision-language detectors from favoring trivially empty scenes, and is
excluded from the canonical count but renders like any other entry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import EmptySubstitution, UnknownDefect

KNOWLEDGE_TEXT = (
    "You are a vision-language assistant responsible for assessing the quality of "
    "synthetically generated images. You have expertise in professional photography "
    "for e-commerce and design. You will receive a question and your task is to "
    "answer with the most appropriate score."
)

OBJECTIVE_TEMPLATE = (
    "You are assessing the quality of a synthetically generated image depicting a "
    "{product_type}. This image is generated by adding a background to an image of "
    "a {product_type}. The main {product_type} is the primary object of the image. "
    "The background is generated by a text-to-image model."
)

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")
_KNOWN_PLACEHOLDERS = {"object_class", "product_type"}


@dataclass(frozen=True)
class DetailedDefect:
    """One question-backed detailed defect."""

    detailed_id: str
    coarse_id: str
    name: str
    question_template: str
    supplementary: bool = False


@dataclass(frozen=True)
class CoarseDefect:
    """One coarse defect family with an illustrative description."""

    coarse_id: str
    name: str
    example_description: str


@dataclass(frozen=True)
class PromptBundle:
    """Fully substituted prompt texts for one detailed defect."""

    detailed_defect_id: str
    knowledge_text: str
    objective_text: str
    question_text: str

    def as_text(self) -> str:
        """Canonical single-file rendering, used for prompt file emission."""
        return (
            f"[knowledge]\n{self.knowledge_text}\n\n"
            f"[objective]\n{self.objective_text}\n\n"
            f"[question]\n{self.question_text}\n"
        )


COARSE_DEFECTS: tuple[CoarseDefect, ...] = (
    CoarseDefect(
        "main_object_distortion",
        "Main Object Distortion",
        "Black dots on the pan cover.",
    ),
    CoarseDefect(
        "main_object_extension",
        "Main Object Extension",
        "Straps added to the backpack.",
    ),
    CoarseDefect(
        "misplaced_object",
        "Misplaced Object",
        "The firepit is an outdoor object but is placed in an indoor environment.",
    ),
    CoarseDefect(
        "scale_mismatch",
        "Scale Mismatch",
        "Chair is much smaller than table.",
    ),
    CoarseDefect(
        "bg_objects_distortion",
        "Background Objects Distortion",
        "Unrealistic chair backs.",
    ),
    CoarseDefect(
        "bg_structural_distortion",
        "Background Structural Distortion",
        "Misaligned wall behind the table.",
    ),
)

DETAILED_DEFECTS: tuple[DetailedDefect, ...] = (
    DetailedDefect(
        "surface_texture",
        "main_object_distortion",
        "Surface texture",
        "Focus on the surface of the {object_class}. Is there any distortion on its texture?",
    ),
    DetailedDefect(
        "color_blending",
        "main_object_distortion",
        "Color blending",
        "Can you see weird color blending at its contours?",
    ),
    DetailedDefect(
        "structural_distortion",
        "main_object_distortion",
        "Structural distortion",
        "Is there any structural distortion in the {object_class}?",
    ),
    DetailedDefect(
        "product_extension",
        "main_object_extension",
        "Product extension",
        "Does the {object_class} present a realistic shape? Compare the shape of the "
        "{object_class} in the first generated image to the reference image and its "
        "segmentation mask. Make sure that the {object_class} did not grow in extension "
        "when the background was generated",
    ),
    DetailedDefect(
        "product_attached",
        "main_object_extension",
        "Product attached",
        "Is there any other object attached to the {object_class}? If so, is this "
        "attachment common and natural?",
    ),
    DetailedDefect(
        "objects_layout",
        "misplaced_object",
        "Objects layout",
        "What objects appear in the scene? Are their relative positions natural?",
    ),
    DetailedDefect(
        "floating_objects",
        "misplaced_object",
        "Floating objects",
        "Look at the {object_class}. It must be standing on a surface. Otherwise, "
        "consider that it is floating, which is a severe issue.",
    ),
    DetailedDefect(
        "matching_location",
        "misplaced_object",
        "Matching location",
        "In which locations is the normally found? Does the context in the image "
        "represent one of these probable locations?",
    ),
    DetailedDefect(
        "functional_location",
        "misplaced_object",
        "Functional location",
        "Where is the {object_class} located? Does it appear in a proper functional location?",
    ),
    DetailedDefect(
        "rich_background",
        "misplaced_object",
        "Rich background",
        "How is the background around the {object_class}? The background must contain "
        "rich semantic and be aesthetically appealing. A solid or uniform background "
        "is not acceptable.",
        supplementary=True,
    ),
    DetailedDefect(
        "scale_mismatch",
        "scale_mismatch",
        "Scale mismatch",
        "There is an anomaly in the size of the {object_class} compared to the rest of "
        "objects in the scene. True or false?",
    ),
    DetailedDefect(
        "objects_distortion",
        "bg_objects_distortion",
        "Objects distortion",
        "What objects appear in the image? Is there any distortion in any of them?",
    ),
    DetailedDefect(
        "scene_structure",
        "bg_structural_distortion",
        "General",
        "Is there any structural distortion in the scene?",
    ),
    DetailedDefect(
        "occlusion_background",
        "bg_structural_distortion",
        "Because occlusion",
        "Is the background behind the {object_class} realistic? Make sure that there "
        "are no discontinuities in the generated background because of the occlusion "
        "of the {product_type}",
    ),
)


class DefectTaxonomy:
    """Catalog of coarse families and their detailed, question-backed defects."""

    def __init__(
        self,
        coarse: tuple[CoarseDefect, ...] = COARSE_DEFECTS,
        detailed: tuple[DetailedDefect, ...] = DETAILED_DEFECTS,
    ):
        coarse_ids = [c.coarse_id for c in coarse]
        detailed_ids = [d.detailed_id for d in detailed]
        if len(set(coarse_ids)) != len(coarse_ids):
            raise ValueError("coarse defect ids must be unique")
        if len(set(detailed_ids)) != len(detailed_ids):
            raise ValueError("detailed defect ids must be unique")
        for d in detailed:
            if d.coarse_id not in coarse_ids:
                raise ValueError(f"detailed defect {d.detailed_id} has unknown coarse id")
            for placeholder in _PLACEHOLDER.findall(d.question_template):
                if placeholder not in _KNOWN_PLACEHOLDERS:
                    raise ValueError(
                        f"{d.detailed_id}: unknown placeholder {{{placeholder}}}"
                    )
        self.coarse = coarse
        self._detailed = detailed
        self._by_id = {d.detailed_id: d for d in detailed}

    def detailed_defects(self, include_supplementary: bool = False) -> tuple[DetailedDefect, ...]:
        """Detailed defects in catalog order; canonical entries only by default."""
        if include_supplementary:
            return self._detailed
        return tuple(d for d in self._detailed if not d.supplementary)

    def detailed_ids(self, include_supplementary: bool = False) -> tuple[str, ...]:
        return tuple(d.detailed_id for d in self.detailed_defects(include_supplementary))

    def coarse_ids(self) -> tuple[str, ...]:
        return tuple(c.coarse_id for c in self.coarse)

    def get(self, detailed_id: str) -> DetailedDefect:
        try:
            return self._by_id[detailed_id]
        except KeyError:
            raise UnknownDefect(f"unknown detailed defect id {detailed_id!r}") from None

    def detailed_for_coarse(
        self, coarse_id: str, include_supplementary: bool = False
    ) -> tuple[DetailedDefect, ...]:
        return tuple(
            d for d in self.detailed_defects(include_supplementary) if d.coarse_id == coarse_id
        )


DEFAULT_TAXONOMY = DefectTaxonomy()


def render_prompt(
    detailed_defect_id: str,
    object_class: str,
    product_type: str,
    taxonomy: DefectTaxonomy = DEFAULT_TAXONOMY,
) -> PromptBundle:
    """Substitute placeholders into the defect's question and shared prompts.

    Rendering is deterministic and byte-exact: the stored templates are used
    as-is with only the two placeholders replaced.
    """
    defect = taxonomy.get(detailed_defect_id)
    if not object_class:
        raise EmptySubstitution("object_class must be non-empty")
    if not product_type:
        raise EmptySubstitution("product_type must be non-empty")
    question = defect.question_template.replace("{object_class}", object_class).replace(
        "{product_type}", product_type
    )
    objective = OBJECTIVE_TEMPLATE.replace("{product_type}", product_type)
    for name, text in (("question", question), ("objective", objective)):
        leftover = _PLACEHOLDER.search(text)
        if leftover:
            raise EmptySubstitution(f"unsubstituted placeholder {leftover.group(0)} in {name}")
    return PromptBundle(detailed_defect_id, KNOWLEDGE_TEXT, objective, question)
