"""
Setup check
Verifies packages, environment settings and a small phase space computation
"""
import math
import os
import sys

from dotenv import load_dotenv

load_dotenv()


def check_env_var(var_name: str, description: str) -> bool:
    """Report an optional environment variable"""
    value = os.getenv(var_name)
    if value:
        print(f" {var_name}: Set ({description})")
        return True
    print(f" {var_name}: Not set ({description})")
    return False


def check_package(package_name: str, pip_name: str = None) -> bool:
    """Check if a Python package is installed"""
    try:
        __import__(package_name)
        print(f" {pip_name or package_name}: Installed")
        return True
    except ImportError:
        print(f" {pip_name or package_name}: Not installed (run: pip install {pip_name or package_name})")
        return False


def check_smoke() -> bool:
    """Exact weights sum to one and a packet's Husimi peak is (2 pi eps)^-1"""
    try:
        from phasespace import GaussianPacket, expansion_coefficients, husimi
    except ImportError as e:
        print(f" phasespace: Import failed ({e})")
        return False
    table = expansion_coefficients(1, 4)
    peak = husimi(GaussianPacket([0.0], [0.0], 0.1), [0.0, 0.0])
    ok = table.signed_mass() == 1 and abs(peak * 2 * math.pi * 0.1 - 1.0) < 1e-12
    if ok:
        print(f" C_3,j (d=1): {', '.join(str(w) for w in table.signed())}")
    else:
        print(" Smoke computation: FAILED")
    return ok


def main():
    print("=" * 60)
    print("Hermite Spectrogram Toolkit - Setup Verification")
    print("=" * 60)
    print()

    print("Checking Environment Variables:")
    print("-" * 60)
    check_env_var("SPECTRO_THREADS", "worker threads, default 1")
    check_env_var("SPECTRO_HERMITE_CAP", "per-axis Hermite order cap, default 60")
    check_env_var("SPECTRO_TRACING", "set to 0 to disable Langfuse")
    tracing = check_env_var("LANGFUSE_PUBLIC_KEY", "Langfuse public key")
    tracing &= check_env_var("LANGFUSE_SECRET_KEY", "Langfuse secret key")
    check_env_var("LANGFUSE_HOST", "Langfuse host")
    if not tracing:
        print("\nLangfuse keys missing: runs will not be traced.")
    print()

    print("Checking Python Packages:")
    print("-" * 60)
    packages_ok = True
    for module, pip_name in [("numpy", None), ("scipy", None), ("mpmath", None), ("pydantic", None),
                             ("dotenv", "python-dotenv"), ("langfuse", None), ("pytest", None)]:
        packages_ok &= check_package(module, pip_name)

    if packages_ok:
        print()
        print("Checking a Small Computation:")
        print("-" * 60)
        packages_ok = check_smoke()

    print()
    print("=" * 60)
    if packages_ok:
        print(" Setup looks good! Try: python main.py coeffs --dim 1 --order 4")
        return 0
    print(" Setup incomplete. Please run: pip install -r requirements.txt")
    return 1


if __name__ == "__main__":
    sys.exit(main())
