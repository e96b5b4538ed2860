#!/usr/bin/env python3
"""
Register the guided-dash MCP server with Claude Desktop / Cursor
Finds the client config files and adds or updates the server entry
"""
import argparse
import json
import os
import platform
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

SERVER_NAME = "guided-dash"


def get_project_path() -> Path:
    return Path(__file__).parent.parent.resolve()


def venv_python(project_path: Path) -> Path:
    if platform.system() == "Windows":
        return project_path / "venv" / "Scripts" / "python.exe"
    return project_path / "venv" / "bin" / "python"


def get_client_config_paths() -> dict:
    """Config file per MCP client for the current OS"""
    system = platform.system()
    home = Path.home()
    paths = {"cursor": home / ".cursor" / "mcp.json"}
    if system == "Darwin":
        paths["claude_desktop"] = home / "Library/Application Support/Claude/claude_desktop_config.json"
    elif system == "Linux":
        paths["claude_desktop"] = home / ".config/Claude/claude_desktop_config.json"
    elif system == "Windows":
        paths["claude_desktop"] = Path(os.getenv("APPDATA", "")) / "Claude/claude_desktop_config.json"
    return paths


def server_entry(project_path: Path, data_dir: str = None) -> dict:
    env = {"GDASH_DATA_DIR": data_dir} if data_dir else {}
    return {
        "command": str(venv_python(project_path)),
        "args": [str(project_path / "mcp_server.py")],
        "env": env,
    }


def register(config_path: Path, entry: dict, client: str) -> bool:
    """Add or update SERVER_NAME in one client config; other servers are kept"""
    config = {}
    if config_path.exists():
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                config = json.load(f)
        except json.JSONDecodeError as e:
            backup = config_path.with_suffix('.json.backup')
            print(f"⚠️  {client}: invalid JSON in {config_path} ({e}); moved to {backup}")
            config_path.rename(backup)
            config = {}

    servers = config.setdefault("mcpServers", {})
    if servers.get(SERVER_NAME) == entry:
        print(f"✅ {client}: {SERVER_NAME} already configured")
        return True
    action = "Updating" if SERVER_NAME in servers else "Adding"
    print(f"   {action} {SERVER_NAME} ({len(servers)} other server(s) kept)")
    servers[SERVER_NAME] = entry

    try:
        config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump(config, f, indent=2, ensure_ascii=False)
    except OSError as e:
        print(f"❌ {client}: failed to write {config_path}: {e}")
        return False
    print(f"✅ {client}: {config_path}")
    return True


def main():
    parser = argparse.ArgumentParser(description="Register the guided-dash MCP server")
    parser.add_argument("--data-dir", help="Value for GDASH_DATA_DIR in the server environment")
    parser.add_argument("--create", action="store_true", help="Create missing client config files")
    args = parser.parse_args()

    print("=" * 60)
    print("MCP Configuration Setup")
    print("=" * 60)

    project_path = get_project_path()
    python = venv_python(project_path)
    print(f"📁 Project path: {project_path}")
    if not python.exists():
        print(f"❌ Error: Virtual environment not found ({python})")
        print("   Run ./scripts/setup.sh first.")
        return 1

    entry = server_entry(project_path, args.data_dir)
    updated = []
    for client, path in get_client_config_paths().items():
        print(f"🔍 {client}")
        if not path.exists() and not args.create:
            print(f"   ⚠️  Config file not found: {path} (use --create to write it)")
            continue
        if register(path, entry, client):
            updated.append(client)

    print("=" * 60)
    if not updated:
        print("⚠️  No MCP client configs updated")
        print("   See mcp_config_examples/ for a manual setup")
        return 0
    print(f"✅ Updated: {', '.join(updated)}")
    print()
    print("📝 Next steps:")
    print("  1. Restart the MCP client")
    print("  2. Ask it to generate a warehouse scenario with 4 robots and plan it")
    return 0


if __name__ == "__main__":
    sys.exit(main())
