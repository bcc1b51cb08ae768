"""Deterministic synthetic corpora for demos and oracle-backed evaluation runs.

A ToyWorld bundles an intent/slot inventory with descriptions and a generator
for utterances whose gold values are real substrings (closed-valued slots
produce inferred pairs instead). Native-format writers emit the same data in
each benchmark's published layout so the loaders can be exercised end to end.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Dataset, GoldSlot, Utterance, is_inferred
from .schema import SlotDescriptor

_VALUE_A = [
    "amber", "birch", "cobalt", "dune", "ember", "fjord", "garnet", "harbor",
    "indigo", "jade", "kelp", "linden", "maple", "quartz", "raven",
]
_VALUE_B = [
    "atlas", "breeze", "cedar", "delta", "echo", "flint", "grove", "heath",
    "iris", "jet", "lagoon", "meadow", "opal", "pearl", "slate",
]

_VERBS = [
    "find", "book", "play", "set", "cancel", "check", "order", "rate",
    "search", "start", "stop", "update",
]
_NOUNS = [
    "restaurant", "hotel", "song", "alarm", "meeting", "weather", "taxi",
    "movie", "playlist", "reminder", "light", "coffee",
]
_SLOT_WORDS = [
    "cuisine", "city", "time", "date", "artist", "genre", "rating", "price-range",
    "venue", "device", "topic", "language", "duration", "person", "color",
    "platform", "quantity", "channel", "event", "weekday",
]


def _value(i: int, j: int) -> str:
    return f"{_VALUE_A[i % len(_VALUE_A)]} {_VALUE_B[j % len(_VALUE_B)]}"


@dataclass
class ToyWorld:
    name: str
    intents: dict[str, str]  # raw label -> description
    slots: dict[str, tuple[str, tuple[str, ...]]]  # type -> (description, closed values)
    intent_slots: dict[str, list[str]]

    def descriptions_doc(self) -> dict:
        return {
            "intents": dict(self.intents),
            "slots": {
                slot_type: (
                    {"description": desc, "closed_values": list(closed)}
                    if closed
                    else {"description": desc}
                )
                for slot_type, (desc, closed) in self.slots.items()
            },
        }

    def write_descriptions(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(
            json.dumps(self.descriptions_doc(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        return path

    def descriptors(self) -> tuple[dict[str, str], dict[str, SlotDescriptor]]:
        """In-memory form accepted by derive_schema."""
        return dict(self.intents), {
            t: SlotDescriptor(t, desc, tuple(closed)) for t, (desc, closed) in self.slots.items()
        }

    def _coverage_pairs(self) -> list[tuple[str, str]]:
        return [(intent, t) for intent in self.intents for t in self.intent_slots[intent]]

    def dataset(
        self,
        n_examples: int | None = None,
        seed: int = 0,
        split: str = "train",
        max_slots: int = 2,
        name: str | None = None,
    ) -> Dataset:
        """Generate utterances; the first pass covers every (intent, slot) pair
        so derived inventories match the declared ones exactly."""
        rng = random.Random(seed)
        pairs = self._coverage_pairs()
        if n_examples is None:
            n_examples = len(pairs)
        labels = sorted(self.intents)
        examples = []
        for i in range(n_examples):
            if i < len(pairs):
                intent, first_slot = pairs[i]
            else:
                intent = labels[rng.randrange(len(labels))]
                available = self.intent_slots[intent]
                first_slot = available[rng.randrange(len(available))] if available else None
            chosen = [first_slot] if first_slot else []
            others = [t for t in self.intent_slots[intent] if t not in chosen]
            rng.shuffle(others)
            chosen.extend(others[: max(0, max_slots - len(chosen))])
            examples.append(self._example(f"{split}-{i}", i, intent, chosen, rng))
        return Dataset(name=name or self.name, split=split, examples=tuple(examples))

    def _example(
        self, ex_id: str, i: int, intent: str, slot_types: list[str], rng: random.Random
    ) -> Utterance:
        span_values: list[str] = []
        gold: list[GoldSlot] = []
        for slot_type in slot_types:
            _, closed = self.slots[slot_type]
            if closed:
                value = closed[i % len(closed)]
            else:
                value = _value(rng.randrange(len(_VALUE_A)), rng.randrange(len(_VALUE_B)))
                span_values.append(value)
            gold.append(GoldSlot(slot_type, value, inferred=bool(closed)))
        description = self.intents[intent]
        middle = f" with {' and '.join(span_values)}" if span_values else ""
        text = f"please {description}{middle} case {i}"
        for slot in gold:
            # Closed values must stay inferred and span values extractable.
            assert is_inferred(text, slot.value) == slot.inferred, (text, slot)
        return Utterance(id=ex_id, text=text, gold_intent=intent, gold_slots=tuple(gold))


def toy_world(
    n_intents: int = 5,
    n_slots: int = 12,
    n_general: int = 2,
    n_closed: int = 0,
    seed: int = 0,
    name: str = "toy",
) -> ToyWorld:
    """A generic world: `n_general` slots spread over >3 intents, `n_closed`
    slots carrying yes/no closed values (their gold pairs are inferred)."""
    rng = random.Random(seed)
    intents: dict[str, str] = {}
    while len(intents) < n_intents:
        i = len(intents)
        verb = _VERBS[i % len(_VERBS)]
        noun = _NOUNS[(i // len(_VERBS) + i) % len(_NOUNS)]
        label = f"{verb}_{noun}" if i < len(_VERBS) * len(_NOUNS) else f"{verb}_{noun}_{i}"
        if label not in intents:
            intents[label] = label.replace("_", " ")
    slot_types: list[str] = []
    while len(slot_types) < n_slots:
        i = len(slot_types)
        base = _SLOT_WORDS[i % len(_SLOT_WORDS)]
        slot_types.append(base if i < len(_SLOT_WORDS) else f"{base}-{i // len(_SLOT_WORDS)}")
    slots = {}
    for i, slot_type in enumerate(slot_types):
        closed = ("yes", "no") if i < n_closed else ()
        slots[slot_type] = (f"the {slot_type.replace('-', ' ')}", closed)

    labels = list(intents)
    intent_slots: dict[str, list[str]] = {label: [] for label in labels}
    # General slots need co-occurrence with more than three intents.
    spread = min(len(labels), 5)
    for i, slot_type in enumerate(slot_types):
        if i < n_general:
            holders = labels[:spread]
        else:
            holders = [labels[i % len(labels)]]
        for label in holders:
            intent_slots[label].append(slot_type)
    for label in labels:  # every intent needs at least one slot
        if not intent_slots[label]:
            slot_type = slot_types[rng.randrange(len(slot_types))]
            intent_slots[label].append(slot_type)
    return ToyWorld(name=name, intents=intents, slots=slots, intent_slots=intent_slots)


def restaurant_world() -> ToyWorld:
    """The running example: find_restaurant with cuisine/city slots."""
    world = ToyWorld(
        name="restaurant-demo",
        intents={
            "find_restaurant": "find restaurant",
            "book_hotel": "book hotel",
            "play_music": "play music",
        },
        slots={
            "cuisine": ("type of cuisine", ()),
            "city": ("name of the city", ()),
            "price-range": ("price range", ()),
            "hotel-name": ("name of the hotel", ()),
            "artist": ("name of the artist", ()),
        },
        intent_slots={
            "find_restaurant": ["cuisine", "price-range", "city"],
            "book_hotel": ["hotel-name", "city"],
            "play_music": ["artist"],
        },
    )
    return world


def restaurant_utterance() -> Utterance:
    text = "Find me a restaurant serving Italian food in Torino"
    return Utterance(
        id="rest-0",
        text=text,
        gold_intent="find_restaurant",
        gold_slots=(
            GoldSlot("cuisine", "Italian", is_inferred(text, "Italian")),
            GoldSlot("city", "Torino", is_inferred(text, "Torino")),
        ),
    )


def dataset_with_inferred_share(
    n_pairs: int = 1000, n_inferred: int = 138, seed: int = 0, split: str = "test"
) -> tuple[Dataset, ToyWorld]:
    """Two gold pairs per utterance with exactly `n_inferred` inferred pairs
    overall (closed-valued parking slot), for recall-ceiling studies."""
    if n_pairs % 2:
        raise ValueError("n_pairs must be even (two pairs per utterance)")
    world = ToyWorld(
        name="inferred-share",
        intents={"book_hotel": "book hotel", "find_restaurant": "find restaurant"},
        slots={
            "hotel-name": ("name of the hotel", ()),
            "area": ("area of town", ()),
            "parking": ("parking available", ("yes", "no")),
        },
        intent_slots={
            "book_hotel": ["hotel-name", "area", "parking"],
            "find_restaurant": ["hotel-name", "area"],
        },
    )
    rng = random.Random(seed)
    examples = []
    n_examples = n_pairs // 2
    for i in range(n_examples):
        name_value = _value(rng.randrange(15), rng.randrange(15))
        area_value = _value(rng.randrange(15), rng.randrange(15))
        if i < n_inferred:
            closed_value = ("yes", "no")[i % 2]
            gold = (
                GoldSlot("hotel-name", name_value, False),
                GoldSlot("parking", closed_value, True),
            )
            text = f"please book hotel with {name_value} case {i}"
        else:
            gold = (
                GoldSlot("hotel-name", name_value, False),
                GoldSlot("area", area_value, False),
            )
            text = f"please book hotel with {name_value} and {area_value} case {i}"
        examples.append(Utterance(id=f"{split}-{i}", text=text, gold_intent="book_hotel", gold_slots=gold))
    return Dataset(name=world.name, split=split, examples=tuple(examples)), world


# -- Table-2-shaped inventories ---------------------------------------------

_SNIPS_INTENTS = {
    "AddToPlaylist": "add to playlist",
    "BookRestaurant": "book restaurant",
    "GetWeather": "get weather",
    "PlayMusic": "play music",
    "RateBook": "rate book",
    "SearchCreativeWork": "search creative work",
    "SearchScreeningEvent": "search screening event",
}

_SNIPS_SLOTS = {
    "AddToPlaylist": ["artist", "playlist", "music_item", "playlist_owner", "entity_name", "playlist_type"],
    "BookRestaurant": [
        "city", "state", "timeRange", "restaurant_type", "served_dish", "party_size_number",
        "poi", "sort", "restaurant_name", "cuisine", "spatial_relation", "facility",
        "party_size_description", "country", "meal_type",
    ],
    "GetWeather": [
        "condition_description", "condition_temperature", "current_location", "geographic_poi",
        "city", "state", "timeRange", "country",
    ],
    "PlayMusic": ["album", "service", "genre", "track", "year", "artist", "music_item", "sort", "radio_station"],
    "RateBook": [
        "object_name", "rating_value", "best_rating", "rating_unit", "object_select",
        "object_part_of_series_type", "object_type",
    ],
    "SearchCreativeWork": ["object_name", "object_type", "podcast_name", "audiobook_name"],
    "SearchScreeningEvent": [
        "movie_name", "movie_type", "location_name", "object_location_type",
        "timeRange", "spatial_relation", "device_type",
    ],
}


def snips_world() -> ToyWorld:
    """7 intents / 45 slot types, SNIPS-shaped (all slots extractive)."""
    slot_types = sorted({t for group in _SNIPS_SLOTS.values() for t in group})
    assert len(slot_types) == 45, len(slot_types)
    slots = {t: (f"the {t.replace('_', ' ')}", ()) for t in slot_types}
    return ToyWorld(
        name="snips",
        intents=dict(_SNIPS_INTENTS),
        slots=slots,
        intent_slots={k: list(v) for k, v in _SNIPS_SLOTS.items()},
    )


_MASSIVE_DOMAINS = [
    "alarm", "audio", "calendar", "cooking", "datetime", "email", "iot", "lists",
    "music", "news", "play", "weather", "transport", "takeaway", "social",
]
_MASSIVE_ACTIONS = ["query", "set", "remove", "update"]

_MASSIVE_SLOT_NAMES = [
    "time", "date", "place_name", "person", "news_topic", "media_type", "device_type",
    "food_type", "business_name", "weather_descriptor", "event_name", "timeofday",
    "song_name", "artist_name", "playlist_name", "podcast_name", "audiobook_name",
    "radio_name", "game_name", "app_name", "email_address", "relation", "list_name",
    "house_place", "color_type", "order_type", "transport_type", "music_genre",
    "alarm_type", "cooking_type", "ingredient", "meal_type", "currency_name",
    "transport_agency", "definition_word", "change_amount", "coffee_type",
    "movie_name", "movie_type", "sport_type", "player_setting", "joke_type",
    "email_folder", "general_frequency", "time_zone", "personal_info",
    "business_type", "drink_type", "music_album", "transport_name", "query_detail",
    "audiobook_author", "podcast_descriptor", "song_descriptor", "playlist_owner",
]


def massive_world() -> ToyWorld:
    """60 intents / 55 slot types, MASSIVE-shaped."""
    intents: dict[str, str] = {
        "iot_hue_lighton": "turn light on",
        "iot_hue_lightoff": "turn light off",
        "music_likeness": "express liking music",
        "alarm_set": "set an alarm",
    }
    for domain in _MASSIVE_DOMAINS:
        for action in _MASSIVE_ACTIONS:
            if len(intents) >= 60:
                break
            label = f"{domain}_{action}"
            if label not in intents:
                intents[label] = f"{action} {domain}"
    assert len(intents) == 60, len(intents)
    slot_types = _MASSIVE_SLOT_NAMES[:55]
    assert len(slot_types) == 55
    slots = {t: (f"the {t.replace('_', ' ')}", ()) for t in slot_types}
    labels = list(intents)
    intent_slots: dict[str, list[str]] = {label: [] for label in labels}
    # First six slots are shared across five intents each (general at threshold 3).
    for i, slot_type in enumerate(slot_types):
        if i < 6:
            holders = labels[i : i + 5] if i + 5 <= len(labels) else labels[:5]
        else:
            holders = [labels[i % len(labels)]]
        for label in holders:
            intent_slots[label].append(slot_type)
    for i, label in enumerate(labels):
        if not intent_slots[label]:
            intent_slots[label].append(slot_types[6 + (i % (len(slot_types) - 6))])
    return ToyWorld(name="massive", intents=intents, slots=slots, intent_slots=intent_slots)


_MULTIWOZ_INTENTS = {
    "find_restaurant": "find restaurant",
    "book_restaurant": "book restaurant",
    "find_hotel": "find hotel",
    "book_hotel": "book hotel",
    "find_attraction": "find attraction",
    "find_train": "find train",
    "book_train": "book train",
    "find_taxi": "find taxi",
    "book_taxi": "book taxi",
    "find_hospital": "find hospital",
    "find_police": "find police station",
}

_MULTIWOZ_SLOTS = {
    "restaurant-food": ("type of food served", ()),
    "restaurant-pricerange": ("price range of the restaurant", ()),
    "restaurant-area": ("area of the restaurant", ()),
    "restaurant-name": ("name of the restaurant", ()),
    "restaurant-booktime": ("time of the restaurant booking", ()),
    "restaurant-bookday": ("day of the restaurant booking", ()),
    "restaurant-bookpeople": ("number of people for the restaurant booking", ()),
    "hotel-name": ("name of the hotel", ()),
    "hotel-area": ("area of the hotel", ()),
    "hotel-parking": ("parking available at the hotel", ("yes", "no")),
    "hotel-pricerange": ("price range of the hotel", ()),
    "hotel-stars": ("star rating of the hotel", ()),
    "hotel-internet": ("internet available at the hotel", ("yes", "no")),
    "hotel-type": ("type of the hotel", ()),
    "hotel-bookday": ("day of the hotel booking", ()),
    "hotel-bookstay": ("length of the hotel stay", ()),
    "attraction-type": ("type of attraction", ()),
    "attraction-name": ("name of the attraction", ()),
    "attraction-area": ("area of the attraction", ()),
    "train-destination": ("destination of the train", ()),
    "train-departure": ("departure place of the train", ()),
    "train-day": ("day of the train trip", ()),
    "train-leaveat": ("time the train should leave", ()),
    "taxi-destination": ("destination of the taxi", ()),
}

_MULTIWOZ_INTENT_SLOTS = {
    "find_restaurant": ["restaurant-food", "restaurant-pricerange", "restaurant-area", "restaurant-name"],
    "book_restaurant": ["restaurant-name", "restaurant-booktime", "restaurant-bookday", "restaurant-bookpeople"],
    "find_hotel": ["hotel-name", "hotel-area", "hotel-parking", "hotel-pricerange", "hotel-stars", "hotel-internet", "hotel-type"],
    "book_hotel": ["hotel-name", "hotel-bookday", "hotel-bookstay"],
    "find_attraction": ["attraction-type", "attraction-name", "attraction-area"],
    "find_train": ["train-destination", "train-departure", "train-day", "train-leaveat"],
    "book_train": ["train-destination", "train-day"],
    "find_taxi": ["taxi-destination", "train-leaveat"],
    "book_taxi": ["taxi-destination"],
    "find_hospital": ["attraction-area"],
    "find_police": ["attraction-area"],
}


def multiwoz_world() -> ToyWorld:
    """11 intents / 24 slot types, MultiWOZ-shaped (two closed-valued slots)."""
    assert len(_MULTIWOZ_INTENTS) == 11 and len(_MULTIWOZ_SLOTS) == 24
    return ToyWorld(
        name="multiwoz",
        intents=dict(_MULTIWOZ_INTENTS),
        slots=dict(_MULTIWOZ_SLOTS),
        intent_slots={k: list(v) for k, v in _MULTIWOZ_INTENT_SLOTS.items()},
    )


# -- native-format writers ----------------------------------------------------


def write_snips_native(dataset: Dataset, path: str | Path) -> Path:
    """Emit {intent: [{"data": [chunks]}]} with slot spans as annotated chunks."""
    by_intent: dict[str, list] = {}
    for ex in dataset.examples:
        spans = []
        for slot in ex.gold_slots:
            start = ex.text.lower().find(slot.value.lower())
            if start < 0:
                raise ValueError(f"value {slot.value!r} not a span of {ex.text!r}")
            spans.append((start, start + len(slot.value), slot.slot_type))
        spans.sort()
        chunks = []
        cursor = 0
        for start, end, slot_type in spans:
            if start > cursor:
                chunks.append({"text": ex.text[cursor:start]})
            chunks.append({"text": ex.text[start:end], "slot_name": slot_type, "entity": slot_type})
            cursor = end
        if cursor < len(ex.text):
            chunks.append({"text": ex.text[cursor:]})
        by_intent.setdefault(ex.gold_intent, []).append({"data": chunks})
    path = Path(path)
    path.write_text(json.dumps(by_intent, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    return path


def write_massive_native(dataset: Dataset, path: str | Path) -> Path:
    """Emit JSONL rows with bracket-annotated annot_utt."""
    partition = {"train": "train", "dev": "dev", "test": "test"}[dataset.split]
    lines = []
    for ex in dataset.examples:
        annot = ex.text
        for slot in ex.gold_slots:
            annot = annot.replace(slot.value, f"[{slot.slot_type} : {slot.value}]", 1)
        lines.append(
            json.dumps(
                {
                    "id": ex.id,
                    "locale": "en-US",
                    "partition": partition,
                    "intent": ex.gold_intent,
                    "utt": ex.text,
                    "annot_utt": annot,
                },
                ensure_ascii=False,
            )
        )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_multiwoz_native(dataset: Dataset, path: str | Path, extra_frames: dict | None = None) -> Path:
    """Emit MultiWOZ-2.2-style dialogues; the gold turn becomes the first USER
    turn followed by a SYSTEM turn. `extra_frames` may add a second active
    frame per dialogue id to simulate multi-domain first turns."""
    dialogues = []
    for ex in dataset.examples:
        service = ex.gold_intent.split("_")[-1]
        frames = [
            {
                "service": service,
                "state": {
                    "active_intent": ex.gold_intent,
                    "requested_slots": [],
                    "slot_values": {s.slot_type: [s.value] for s in ex.gold_slots},
                },
            }
        ]
        if extra_frames and ex.id in extra_frames:
            frames.append(extra_frames[ex.id])
        dialogues.append(
            {
                "dialogue_id": ex.id,
                "services": [service],
                "turns": [
                    {"turn_id": "0", "speaker": "USER", "utterance": ex.text, "frames": frames},
                    {"turn_id": "1", "speaker": "SYSTEM", "utterance": "certainly, one moment", "frames": []},
                ],
            }
        )
    path = Path(path)
    path.write_text(json.dumps(dialogues, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    return path
