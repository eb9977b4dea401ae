"""Smoke test for the patchup_py extension module.

Run after `maturin develop`, or with PYTHONPATH pointing at a directory that
holds the built library renamed to patchup_py.so.
"""
import math
import os
import tempfile

import patchup_py as pu


def sphere(n):
    golden = math.pi * (3.0 - math.sqrt(5.0))
    pts = []
    for i in range(n):
        z = 1.0 - (2.0 * i + 1.0) / n
        r = math.sqrt(1.0 - z * z)
        pts.append((r * math.cos(golden * i), r * math.sin(golden * i), z))
    return pu.PointCloud(pts)


def main():
    r = pu.decode_rotation([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    assert r == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    assert pu.bicubic_eval([0.0] * 2 + [1.0] + [0.0] * 13, 0.5, 2.0) == 0.25

    cloud = sphere(512)
    fit = pu.fit_patch(cloud, 0, 16)
    assert fit.rms_residual <= math.sqrt(fit.displacement_loss) + 1e-12

    cfg = pu.UpsampleConfig(ratios=[1, 4], k=16)
    dense = pu.upsample(cloud, cfg)
    assert len(dense) == 2048
    radial = [abs(math.sqrt(x * x + y * y + z * z) - 1.0) for x, y, z in dense.to_list()]
    assert sum(radial) / len(radial) < 1e-3

    index = pu.KnnIndex(cloud)
    hits = index.knn(cloud.to_list()[0], 4)
    assert hits[0] == (0, 0.0)

    gt = sphere(2048)
    report = pu.evaluate(dense, gt)
    assert report.cd_l2 > 0.0 and report.emd is not None
    assert len(report.uniformity) == 4
    assert pu.chamfer_l2(gt, gt) == 0.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "dense.ply")
        pu.write_cloud(dense, path)
        back = pu.read_cloud(path)
        assert back.to_list() == dense.to_list()

    try:
        pu.upsample(cloud, pu.UpsampleConfig(k=4096))
    except pu.PatchupError:
        pass
    else:
        raise AssertionError("k > N should fail")

    print("smoke test passed")


if __name__ == "__main__":
    main()
