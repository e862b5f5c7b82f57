"""Write synthetic corpora to disk in the manifest layout."""

from fwan.corpus import serialize_play


def write_corpus(root, canons, joint=None, disputed=()):
    """Serialize plays under ``root/plays`` and write ``root/manifest.toml``.

    ``disputed`` holds ``(play, candidates, scene_candidates)`` triples.
    """
    plays_dir = root / "plays"
    plays_dir.mkdir(parents=True, exist_ok=True)

    def put(play):
        f = plays_dir / f"{play.title}.txt"
        if not f.exists():
            f.write_text(serialize_play(play), encoding="utf-8")
        return f'"plays/{f.name}"'

    lines = ["[authors]"]
    for name, plays in canons.items():
        lines.append(f'"{name}" = [{", ".join(put(p) for p in plays)}]')
    if joint:
        lines.append("[joint_canons]")
        for name, plays in joint.items():
            lines.append(f'"{name}" = [{", ".join(put(p) for p in plays)}]')
    for play, cands, scene in disputed:
        lines += ["[[disputed]]", f"play = {put(play)}"]
        if cands:
            lines.append("candidates = [" + ", ".join(f'"{c}"' for c in cands) + "]")
        if scene:
            lines.append("scene_candidates = [" + ", ".join(f'"{c}"' for c in scene) + "]")
    path = root / "manifest.toml"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
