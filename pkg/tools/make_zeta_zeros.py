"""Regenerate the bundled list of zeta zero ordinates (needs mpmath).

Usage: python tools/make_zeta_zeros.py [count] > src/primepoints/data/zeta_zeros_100.txt
"""
import sys

import mpmath


def main() -> None:
    count = int(sys.argv[1]) if len(sys.argv) > 1 else 100
    mpmath.mp.dps = 30
    print("# modulus: 1")
    print("# label: principal")
    print(f"# first {count} ordinates t > 0 of zeros 1/2 + it of the Riemann zeta function")
    for k in range(1, count + 1):
        print(mpmath.nstr(mpmath.zetazero(k).imag, 20))


if __name__ == "__main__":
    main()
