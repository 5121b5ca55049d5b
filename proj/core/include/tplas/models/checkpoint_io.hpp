#pragma once

#include <filesystem>
#include <string>

#include "tplas/core/types.hpp"

namespace tplas::models {

/// Canonical file text: one line of compact JSON
/// {format_version, spec, provenance, params: [{name, shape, values}]}
/// followed by a trailer line "crc32 <hex>" over that JSON.
std::string to_text(const Checkpoint& ckpt);

/// Parses and validates file text. Throws ModelError on version mismatch, malformed or
/// truncated JSON (naming the array being read), wrong array lengths, or checksum failure.
Checkpoint from_text(const std::string& text);

/// Atomic: writes a temp file next to `path` and renames it into place.
void save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

/// Checksum of the canonical text; two checkpoints with equal checksums are identical.
std::string checksum(const Checkpoint& ckpt);

}  // namespace tplas::models
