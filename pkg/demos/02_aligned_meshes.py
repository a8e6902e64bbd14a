"""Locally field-aligned meshes and their non-conforming interfaces.

Aligning every cell with the direction field b makes the aligned edges
exactly tangent to b, at the price of splitting the cross-field edges into
two sub-segments whenever (b2/b1)*(Ny/Nx) is not an integer.  The aspect
ratio decides which edge pair to align.
"""

from anisodg import (Alignment, FieldDirection, MeshConfig, aspect_ratios,
                     build_mesh, choose_alignment)

for b in [FieldDirection(1.165939761, 1.0), FieldDirection(2.0, 7.0)]:
    ar_bt, ar_lr = aspect_ratios(b)
    pick = choose_alignment(b)
    print(f"b = ({b.b1}, {b.b2}): aspect ratios bottom/top {ar_bt:.4f}, "
          f"left/right {ar_lr:.4f} -> {pick.value}")

b = FieldDirection(1.165939761, 1.0)
mesh = build_mesh(MeshConfig(4, 4, Alignment.BOTTOM_TOP, b))
splits = [i for i in mesh.interfaces if i.owner_range != (-1.0, 1.0)]
widths = sorted({round(i.h_F, 6) for i in splits})
print(f"\n4x4 aligned mesh for b = ({b.b1}, {b.b2}):")
print(f"  {mesh.n_cells} cells, {len(mesh.interfaces)} interfaces, "
      f"{len(splits)} split sub-segments with lengths {widths}")

checks = [abs(b.b1 * i.normal[0] + b.b2 * i.normal[1])
          for i in mesh.interfaces if i.owner_edge == "top"]
print(f"  field tangency on aligned edges: max |b.n| = {max(checks):.2e}")

print("\nsummary of a tiny 2x2 mesh:")
print(build_mesh(MeshConfig(2, 2, Alignment.BOTTOM_TOP, b)).summary())
