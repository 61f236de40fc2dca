#!/usr/bin/env python3
"""Export a Hugging Face BERT checkpoint to the toolkit's on-disk layout.

Writes <out>/config.json, <out>/vocab.txt and <out>/weights.pptc so that
the C++ side can load the model without any Python at runtime:

    python tools/hf_export.py --model bert-base-uncased --out models/bert-base-uncased

Needs numpy, plus either safetensors or torch to read the checkpoint.
"""

import argparse
import json
import os
import shutil
import struct
import sys

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1
ALIGN = 64


def fnv1a(buf, h=FNV_OFFSET):
    # Byte-serial by definition; a bert-base payload takes a minute or two.
    for b in buf:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def write_pptc(path, tensors, meta):
    """tensors: list of (name, np.float32 2-D array), payload order preserved."""
    payload = bytearray()
    directory = []
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"{name}: expected rank 2, got {arr.ndim}")
        offset = (len(payload) + ALIGN - 1) // ALIGN * ALIGN
        payload.extend(b"\0" * (offset - len(payload)))
        raw = arr.tobytes()
        payload.extend(raw)
        directory.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": "f32",
                "offset": offset,
                "bytes": len(raw),
            }
        )
    header = {
        "meta": meta,
        "checksum": f"{fnv1a(payload):016x}",
        "tensors": directory,
    }
    hs = json.dumps(header, separators=(",", ":")).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as out:
        out.write(b"PPTC")
        out.write(struct.pack("<I", 1))
        out.write(struct.pack("<Q", len(hs)))
        out.write(hs)
        pos = 4 + 4 + 8 + len(hs)
        out.write(b"\0" * ((pos + ALIGN - 1) // ALIGN * ALIGN - pos))
        out.write(bytes(payload))
    os.replace(tmp, path)


def load_state_dict(model_dir):
    st = os.path.join(model_dir, "model.safetensors")
    if os.path.exists(st):
        from safetensors.numpy import load_file

        return load_file(st)
    pt = os.path.join(model_dir, "pytorch_model.bin")
    if os.path.exists(pt):
        import torch

        state = torch.load(pt, map_location="cpu", weights_only=True)
        return {k: v.numpy() for k, v in state.items()}
    raise SystemExit(f"no model.safetensors or pytorch_model.bin under {model_dir}")


def resolve_model(ref):
    """Accept a local directory or a hub name (downloaded via huggingface_hub)."""
    if os.path.isdir(ref):
        return ref
    from huggingface_hub import snapshot_download

    return snapshot_download(
        ref, allow_patterns=["config.json", "vocab.txt", "*.safetensors", "*.bin"]
    )


def mapped_name(hf_name):
    """HF parameter name -> toolkit name, or None for tensors we don't keep."""
    n = hf_name
    if n.startswith("bert."):
        n = n[len("bert.") :]
    if n.startswith("embeddings."):
        return {
            "embeddings.word_embeddings.weight": "embeddings.word",
            "embeddings.position_embeddings.weight": "embeddings.position",
            "embeddings.token_type_embeddings.weight": "embeddings.token_type",
            "embeddings.LayerNorm.weight": "embeddings.ln.gamma",
            "embeddings.LayerNorm.bias": "embeddings.ln.beta",
        }.get(n)
    if not n.startswith("encoder.layer."):
        return None  # pooler, cls head, position_ids buffer, ...
    rest = n[len("encoder.layer.") :]
    idx, rest = rest.split(".", 1)
    suffix = {
        "attention.self.query.weight": "attention.query.weight",
        "attention.self.query.bias": "attention.query.bias",
        "attention.self.key.weight": "attention.key.weight",
        "attention.self.key.bias": "attention.key.bias",
        "attention.self.value.weight": "attention.value.weight",
        "attention.self.value.bias": "attention.value.bias",
        "attention.output.dense.weight": "attention.output.weight",
        "attention.output.dense.bias": "attention.output.bias",
        "attention.output.LayerNorm.weight": "attention.ln.gamma",
        "attention.output.LayerNorm.bias": "attention.ln.beta",
        "intermediate.dense.weight": "ffn.intermediate.weight",
        "intermediate.dense.bias": "ffn.intermediate.bias",
        "output.dense.weight": "ffn.output.weight",
        "output.dense.bias": "ffn.output.bias",
        "output.LayerNorm.weight": "ffn.ln.gamma",
        "output.LayerNorm.bias": "ffn.ln.beta",
    }.get(rest)
    return f"layer{idx}.{suffix}" if suffix else None


def expected_names(num_layers):
    names = [
        "embeddings.word",
        "embeddings.position",
        "embeddings.token_type",
        "embeddings.ln.gamma",
        "embeddings.ln.beta",
    ]
    for l in range(num_layers):
        p = f"layer{l}."
        names += [
            p + "attention.query.weight",
            p + "attention.query.bias",
            p + "attention.key.weight",
            p + "attention.key.bias",
            p + "attention.value.weight",
            p + "attention.value.bias",
            p + "attention.output.weight",
            p + "attention.output.bias",
            p + "attention.ln.gamma",
            p + "attention.ln.beta",
            p + "ffn.intermediate.weight",
            p + "ffn.intermediate.bias",
            p + "ffn.output.weight",
            p + "ffn.output.bias",
            p + "ffn.ln.gamma",
            p + "ffn.ln.beta",
        ]
    return names


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", required=True, help="HF hub name or local checkpoint dir")
    ap.add_argument("--out", required=True, help="output directory")
    args = ap.parse_args()

    model_dir = resolve_model(args.model)
    with open(os.path.join(model_dir, "config.json")) as f:
        hf_config = json.load(f)

    state = load_state_dict(model_dir)
    mapped = {}
    for hf_name, arr in state.items():
        name = mapped_name(hf_name)
        if name is None:
            continue
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)  # biases and LN vectors stored as 1 x H
        mapped[name] = arr

    num_layers = hf_config["num_hidden_layers"]
    order = expected_names(num_layers)
    missing = [n for n in order if n not in mapped]
    if missing:
        raise SystemExit(f"checkpoint is missing {len(missing)} tensors, e.g. {missing[0]}")

    os.makedirs(args.out, exist_ok=True)

    config = {
        k: hf_config[k]
        for k in (
            "vocab_size",
            "hidden_size",
            "num_hidden_layers",
            "num_attention_heads",
            "intermediate_size",
            "max_position_embeddings",
            "type_vocab_size",
            "layer_norm_eps",
        )
        if k in hf_config
    }
    config["model_id"] = os.path.basename(args.model.rstrip("/"))
    config["do_lower_case"] = "uncased" in config["model_id"].lower()
    with open(os.path.join(args.out, "config.json"), "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")

    vocab_src = os.path.join(model_dir, "vocab.txt")
    if not os.path.exists(vocab_src):
        raise SystemExit(f"{model_dir} has no vocab.txt (WordPiece vocab required)")
    shutil.copyfile(vocab_src, os.path.join(args.out, "vocab.txt"))

    meta = {
        "kind": "bert-weights",
        "vocab_size": config.get("vocab_size"),
        "hidden_size": config.get("hidden_size"),
        "num_hidden_layers": config.get("num_hidden_layers"),
        "num_attention_heads": config.get("num_attention_heads"),
        "intermediate_size": config.get("intermediate_size"),
        "max_position_embeddings": config.get("max_position_embeddings"),
        "type_vocab_size": config.get("type_vocab_size"),
        "layer_norm_eps": config.get("layer_norm_eps"),
        "source": args.model,
    }
    print(f"writing {len(order)} tensors (checksum pass is slow, be patient)")
    write_pptc(os.path.join(args.out, "weights.pptc"), [(n, mapped[n]) for n in order], meta)
    total = sum(mapped[n].size for n in order)
    print(f"wrote {args.out}: {total} parameters, {num_layers} layers")


if __name__ == "__main__":
    sys.exit(main())
