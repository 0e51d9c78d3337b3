"""Analyst session: the single-writer state behind the CLI and the service.

A session owns a model, the registered controls, and the attachment records.
Bundles are built lazily and mutated in place when controls attach, so every
tree synthesized through the session shows the controls of the bundles it
references.  Attachment records are a flat list (control id, slot, timestamp)
and round-trip through the CLI session file and the service API unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone

from .bundle import Bundle, build_bundle
from .defences import (
    Category,
    Control,
    PlacementSlot,
    SlotKind,
    apply_preventive,
    apply_root_control,
    check_slot_category,
    find_access_from,
    make_perimeter_bundle,
    remove_control,
)
from .errors import DomainRuleError, UnknownElementError
from .model import Model
from .synthesis import AdTree, FixpointResult, run_fixpoint, synthesize


@dataclass(frozen=True)
class Attachment:
    control_id: str
    slot: PlacementSlot
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "controlId": self.control_id,
            "slot": self.slot.key(),
            "timestamp": self.timestamp,
        }


class Session:
    def __init__(self, model: Model, clock=None):
        self.model = model
        self.controls: dict[str, Control] = {}
        self.attachments: list[Attachment] = []
        self.revision = 0
        self._bundles: dict[str, Bundle] = {}
        self._perimeter_bundles: dict[str, Bundle] = {}
        self._tree_cache: dict[tuple[str, str], FixpointResult] = {}
        self._clock = clock or (lambda: datetime.now(timezone.utc).isoformat())

    # -- bundles ------------------------------------------------------------

    def bundle(self, asset: str) -> Bundle:
        if asset not in self._bundles:
            self._bundles[asset] = build_bundle(self.model, asset)
        return self._bundles[asset]

    def perimeter_bundle(self, perimeter_id: str) -> Bundle:
        if perimeter_id not in self.model.perimeters:
            raise UnknownElementError(f"unknown perimeter {perimeter_id!r}")
        if perimeter_id not in self._perimeter_bundles:
            self._perimeter_bundles[perimeter_id] = make_perimeter_bundle(perimeter_id)
        return self._perimeter_bundles[perimeter_id]

    def perimeter_references(self, location: str) -> list[str]:
        """Control ids a location inherits from the perimeters containing it."""
        refs = []
        for attachment in self.attachments:
            if attachment.slot.kind != SlotKind.PERIMETER:
                continue
            perimeter = self.model.perimeters.get(attachment.slot.owner)
            if perimeter is not None and location in perimeter.locations:
                refs.append(attachment.control_id)
        return refs

    # -- controls -----------------------------------------------------------

    def register_control(self, control: Control) -> None:
        if control.id in self.controls:
            raise DomainRuleError(f"control {control.id!r} already registered")
        self.controls[control.id] = control
        self._mutated()

    def attachment_of(self, control_id: str) -> Attachment | None:
        for attachment in self.attachments:
            if attachment.control_id == control_id:
                return attachment
        return None

    def attach(self, control_id: str, slot: PlacementSlot) -> Attachment:
        control = self.controls.get(control_id)
        if control is None:
            raise UnknownElementError(f"unknown control {control_id!r}")
        if self.attachment_of(control_id) is not None:
            raise DomainRuleError(f"duplicate attachment of control {control_id!r}")

        if slot.kind == SlotKind.PERIMETER:
            if control.category == Category.PREVENTIVE:
                raise DomainRuleError(
                    "perimeter slots take detective or corrective controls"
                )
            bundle = self.perimeter_bundle(slot.owner)
            apply_root_control(bundle.root, slot.owner, control_id)
        else:
            check_slot_category(control, slot)
            self.model.element(slot.owner)
            bundle = self.bundle(slot.owner)
            if slot.kind == SlotKind.PREVENTIVE:
                assert slot.location is not None
                find_access_from(bundle, slot.location)  # raises on bad approach
                apply_preventive(bundle, slot.location, control_id)
            else:
                apply_root_control(bundle.root, slot.owner, control_id)

        attachment = Attachment(control_id=control_id, slot=slot, timestamp=self._clock())
        self.attachments.append(attachment)
        self._mutated()
        return attachment

    def detach(self, control_id: str) -> Attachment:
        attachment = self.attachment_of(control_id)
        if attachment is None:
            raise DomainRuleError(f"control {control_id!r} is not attached")
        slot = attachment.slot
        if slot.kind == SlotKind.PERIMETER:
            removed = remove_control(self.perimeter_bundle(slot.owner).root, control_id)
        else:
            removed = remove_control(self.bundle(slot.owner).root, control_id)
        assert removed, "attachment record without a node attachment"
        self.attachments.remove(attachment)
        self._mutated()
        return attachment

    # -- analysis -----------------------------------------------------------

    def synthesize(self, attacker: str, asset: str) -> AdTree:
        return synthesize(self.model, attacker, asset, bundles=self.bundle)

    def evaluate(self, attacker: str, asset: str) -> FixpointResult:
        key = (attacker, asset)
        if key not in self._tree_cache:
            self._tree_cache[key] = run_fixpoint(
                self.model, attacker, asset, bundles=self.bundle
            )
        return self._tree_cache[key]

    def _mutated(self) -> None:
        self.revision += 1
        self._tree_cache.clear()

    # -- persistence ----------------------------------------------------------

    def attachment_records(self) -> list[dict]:
        return [a.to_dict() for a in self.attachments]

    def save_attachments(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.attachment_records(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def replay_attachments(self, records: list[dict]) -> None:
        for record in records:
            attachment = self.attach(record["controlId"], PlacementSlot.parse(record["slot"]))
            if "timestamp" in record:  # keep original stamps on reload
                self.attachments[-1] = Attachment(
                    attachment.control_id, attachment.slot, record["timestamp"]
                )

    @staticmethod
    def load(model: Model, controls: list[Control] | None = None,
             records: list[dict] | None = None, clock=None) -> "Session":
        session = Session(model, clock=clock)
        for control in controls or []:
            session.controls[control.id] = control
        session.replay_attachments(records or [])
        return session
