#!/usr/bin/env python3
"""Regenerates the benchmark network files in data/networks/.

Each network is a transcription of the published architecture into the flat
conv-layer schema the loader understands:

    {"name": ..., "layers": [{"name", "type": "conv"|"dwconv",
                              "C", "K", "R", "S", "Xp", "Yp",
                              "stride", "groups"?}, ...]}

C/K are total input/output channels, Xp/Yp the *output* spatial size.
Pooling, activations, and fully-connected heads are not convolutions and are
omitted. UNet's 2x2 transposed convolutions are written as ordinary 2x2
convolutions at the output resolution (see data/networks/README.md).
"""

import json
import os

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "networks")


def conv(name, c, k, r, s, xp, yp, stride=1, groups=None, kind="conv"):
    layer = {
        "name": name,
        "type": kind,
        "C": c,
        "K": k,
        "R": r,
        "S": s,
        "Xp": xp,
        "Yp": yp,
        "stride": stride,
    }
    if groups is not None:
        layer["groups"] = groups
    return layer


def dwconv(name, ch, r, s, xp, yp, stride=1):
    return conv(name, ch, ch, r, s, xp, yp, stride, kind="dwconv")


def vgg16():
    cfg = [  # (stage, convs, in_ch, out_ch, spatial)
        (1, 2, 3, 64, 224),
        (2, 2, 64, 128, 112),
        (3, 3, 128, 256, 56),
        (4, 3, 256, 512, 28),
        (5, 3, 512, 512, 14),
    ]
    layers = []
    for stage, n, c_in, c_out, hw in cfg:
        for i in range(n):
            c = c_in if i == 0 else c_out
            layers.append(conv(f"conv{stage}_{i + 1}", c, c_out, 3, 3, hw, hw))
    return {"name": "vgg16", "layers": layers}


def resnet50():
    # torchvision convention: the stride-2 downsample sits on each stage's
    # first 3x3 (and its 1x1 projection shortcut).
    layers = [conv("conv1", 3, 64, 7, 7, 112, 112, stride=2)]
    stages = [  # (name, blocks, mid_ch, out_ch, output spatial, first-block stride)
        ("s2", 3, 64, 256, 56, 1),
        ("s3", 4, 128, 512, 28, 2),
        ("s4", 6, 256, 1024, 14, 2),
        ("s5", 3, 512, 2048, 7, 2),
    ]
    c_in = 64
    for name, blocks, mid, out, hw, first_stride in stages:
        for b in range(blocks):
            stride = first_stride if b == 0 else 1
            hw_in = hw * stride  # spatial size before this block downsamples
            layers.append(conv(f"{name}b{b + 1}_red", c_in, mid, 1, 1, hw_in, hw_in))
            layers.append(conv(f"{name}b{b + 1}_3x3", mid, mid, 3, 3, hw, hw, stride))
            layers.append(conv(f"{name}b{b + 1}_exp", mid, out, 1, 1, hw, hw))
            if b == 0:
                layers.append(conv(f"{name}b1_proj", c_in, out, 1, 1, hw, hw, stride))
            c_in = out
    return {"name": "resnet50", "layers": layers}


def unet():
    # 256x256 input, same-padded 3x3 convs, channels doubling per depth.
    layers = []
    enc = [(3, 64, 256), (64, 128, 128), (128, 256, 64), (256, 512, 32)]
    for d, (c_in, c_out, hw) in enumerate(enc, start=1):
        layers.append(conv(f"enc{d}a", c_in, c_out, 3, 3, hw, hw))
        layers.append(conv(f"enc{d}b", c_out, c_out, 3, 3, hw, hw))
    layers.append(conv("bota", 512, 1024, 3, 3, 16, 16))
    layers.append(conv("botb", 1024, 1024, 3, 3, 16, 16))
    dec = [(1024, 512, 32), (512, 256, 64), (256, 128, 128), (128, 64, 256)]
    for d, (c_in, c_out, hw) in zip(range(4, 0, -1), dec):
        # 2x2/2 transposed conv approximated as a 2x2 conv at output size.
        layers.append(conv(f"up{d}", c_in, c_out, 2, 2, hw, hw))
        layers.append(conv(f"dec{d}a", c_in, c_out, 3, 3, hw, hw))  # concat doubles C
        layers.append(conv(f"dec{d}b", c_out, c_out, 3, 3, hw, hw))
    layers.append(conv("out", 64, 2, 1, 1, 256, 256))
    return {"name": "unet", "layers": layers}


def mobilenetv2():
    layers = [conv("stem", 3, 32, 3, 3, 112, 112, stride=2)]
    # (expansion t, out channels c, repeats n, first stride s)
    cfg = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
           (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    c_in, hw = 32, 112
    for stage, (t, c, n, s) in enumerate(cfg, start=1):
        for b in range(n):
            stride = s if b == 0 else 1
            hw_out = hw // stride
            mid = c_in * t
            tag = f"b{stage}_{b + 1}"
            if t != 1:
                layers.append(conv(f"{tag}_expand", c_in, mid, 1, 1, hw, hw))
            layers.append(dwconv(f"{tag}_dw", mid, 3, 3, hw_out, hw_out, stride))
            layers.append(conv(f"{tag}_project", mid, c, 1, 1, hw_out, hw_out))
            c_in, hw = c, hw_out
    layers.append(conv("head", 320, 1280, 1, 1, 7, 7))
    return {"name": "mobilenetv2", "layers": layers}


def squeezenet():
    # v1.1: 3x3/2 stem (valid padding: 224 -> 111), fire modules, 1x1 head.
    layers = [conv("conv1", 3, 64, 3, 3, 111, 111, stride=2)]
    fires = [  # (name, in_ch, squeeze, expand, spatial after preceding pool)
        ("fire2", 64, 16, 64, 55), ("fire3", 128, 16, 64, 55),
        ("fire4", 128, 32, 128, 27), ("fire5", 256, 32, 128, 27),
        ("fire6", 256, 48, 192, 13), ("fire7", 384, 48, 192, 13),
        ("fire8", 384, 64, 256, 13), ("fire9", 512, 64, 256, 13),
    ]
    for name, c_in, sq, ex, hw in fires:
        layers.append(conv(f"{name}_squeeze", c_in, sq, 1, 1, hw, hw))
        layers.append(conv(f"{name}_expand1", sq, ex, 1, 1, hw, hw))
        layers.append(conv(f"{name}_expand3", sq, ex, 3, 3, hw, hw))
    layers.append(conv("conv10", 512, 1000, 1, 1, 13, 13))
    return {"name": "squeezenet", "layers": layers}


def mnasnet():
    # MnasNet-B1 (no squeeze-excite, so every op is a plain or depthwise conv).
    layers = [conv("stem", 3, 32, 3, 3, 112, 112, stride=2),
              dwconv("sep_dw", 32, 3, 3, 112, 112),
              conv("sep_pw", 32, 16, 1, 1, 112, 112)]
    # (kernel, expansion t, out channels c, repeats n, first stride s)
    cfg = [(3, 3, 24, 3, 2), (5, 3, 40, 3, 2), (5, 6, 80, 3, 2),
           (3, 6, 96, 2, 1), (5, 6, 192, 4, 2), (3, 6, 320, 1, 1)]
    c_in, hw = 16, 112
    for stage, (k, t, c, n, s) in enumerate(cfg, start=1):
        for b in range(n):
            stride = s if b == 0 else 1
            hw_out = hw // stride
            mid = c_in * t
            tag = f"b{stage}_{b + 1}"
            layers.append(conv(f"{tag}_expand", c_in, mid, 1, 1, hw, hw))
            layers.append(dwconv(f"{tag}_dw", mid, k, k, hw_out, hw_out, stride))
            layers.append(conv(f"{tag}_project", mid, c, 1, 1, hw_out, hw_out))
            c_in, hw = c, hw_out
    layers.append(conv("head", 320, 1280, 1, 1, 7, 7))
    return {"name": "mnasnet", "layers": layers}


def smoke():
    return {"name": "smoke", "layers": [
        conv("c1", 3, 8, 3, 3, 8, 8),
        dwconv("c2", 8, 3, 3, 8, 8),
        conv("c3", 8, 16, 1, 1, 8, 8),
    ]}


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for net in (vgg16(), resnet50(), unet(), mobilenetv2(), squeezenet(), mnasnet(), smoke()):
        path = os.path.join(OUT_DIR, net["name"] + ".json")
        with open(path, "w") as f:
            json.dump(net, f, indent=2)
            f.write("\n")
        macs = sum(l["C"] * l["K"] * l["R"] * l["S"] * l["Xp"] * l["Yp"]
                   // l.get("groups", l["C"] if l["type"] == "dwconv" else 1)
                   for l in net["layers"])
        print(f"{net['name']}: {len(net['layers'])} conv layers, {macs / 1e9:.2f} GMACs")


if __name__ == "__main__":
    main()
