#!/usr/bin/env python3
"""
Setup script for the simultaneous assignment toolkit.
Installs dependencies, prepares the environment file and checks the bundled figures.
"""
import os
import sys
import subprocess
import shutil

FIGURES = ['fig1.3dm', 'fig2.json', 'fig3.json', 'fig4.json', 'fig6.json',
           'fig7.json', 'fig8.json', 'fig10a.json', 'fig10b.json']


def check_python_version():
    """Check if Python version is compatible."""
    if sys.version_info < (3, 9):
        print("❌ Python 3.9 or higher is required.")
        print(f"Current version: {sys.version}")
        return False
    print(f"✅ Python version: {sys.version.split()[0]}")
    return True


def install_dependencies():
    """Install required Python packages."""
    print("📦 Installing Python dependencies...")

    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✅ Dependencies installed successfully!")
        return True
    except subprocess.CalledProcessError as e:
        print(f"❌ Failed to install dependencies: {e}")
        return False


def setup_env_file():
    """Set up the .env file if it doesn't exist."""
    if os.path.exists(".env"):
        print("✅ .env file already exists")
        return True

    print("📝 Setting up .env file...")

    try:
        shutil.copy(".env.example", ".env")
        print("✅ .env file created from template")
        return True
    except FileNotFoundError:
        print("❌ .env.example not found")
        return False


def check_figures():
    """Check that the example instances are present."""
    print("🔍 Checking example instances...")
    missing = [name for name in FIGURES if not os.path.exists(os.path.join("figures", name))]
    if missing:
        print(f"⚠️  Missing example instances: {', '.join(missing)}")
        return False
    print(f"✅ Found {len(FIGURES)} example instances")
    return True


def main():
    """Main setup function."""
    print("🚀 Setting up the simultaneous assignment toolkit...\n")

    if not check_python_version():
        sys.exit(1)

    if not install_dependencies():
        sys.exit(1)

    if not setup_env_file():
        sys.exit(1)

    check_figures()

    print("\n🎉 Setup completed!")
    print("\n📋 Next steps:")
    print("1. Adjust solver limits in .env if needed")
    print("2. Run the smoke checks:")
    print("   python simple_test.py")
    print("3. Run the test suite:")
    print("   pytest")
    print("4. Try the command-line tool:")
    print("   python sap.py gap figures/fig6.json")

    print("\n📚 For more information, see README.md")


if __name__ == "__main__":
    main()
