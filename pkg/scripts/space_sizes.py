"""Print the search-space size of every registered (kernel, size) pair."""
from tiletuner.kernels import KERNELS, SIZE_NAMES
from tiletuner.space import build_space, space_size

if __name__ == "__main__":
    print(f"{'kernel':<10}{'size':<12}{'params':>7}{'space size':>16}")
    for kernel in KERNELS:
        for size in SIZE_NAMES:
            sp = build_space(kernel, size)
            print(f"{kernel:<10}{size:<12}{sp.ndim:>7}{space_size(sp):>16,}")
