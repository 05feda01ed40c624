#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ffsarena {

using Ino = std::uint32_t;
inline constexpr Ino kRootIno = 1;

enum class FileKind : std::uint8_t { File = 1, Dir = 2 };

struct FileAttr {
  FileKind kind = FileKind::File;
  std::uint64_t size = 0;  // bytes for files; 0 for directories
  Ino inode = 0;
  friend bool operator==(const FileAttr &, const FileAttr &) = default;
};

struct DirEntry {
  std::string name;
  FileKind kind = FileKind::File;
  Ino inode = 0;
  friend bool operator==(const DirEntry &, const DirEntry &) = default;
};

enum class FsErrc {
  NotMounted,
  AlreadyMounted,
  NotFound,
  NotADirectory,
  IsADirectory,
  Exists,
  NotEmpty,
  NoSpace,
  InvalidPath,
  NoFilesystem,
  NothingToCollect,
  PartitionTooSmall,
};

inline const char *to_string(FsErrc e) {
  switch (e) {
    case FsErrc::NotMounted: return "NotMounted";
    case FsErrc::AlreadyMounted: return "AlreadyMounted";
    case FsErrc::NotFound: return "NotFound";
    case FsErrc::NotADirectory: return "NotADirectory";
    case FsErrc::IsADirectory: return "IsADirectory";
    case FsErrc::Exists: return "Exists";
    case FsErrc::NotEmpty: return "NotEmpty";
    case FsErrc::NoSpace: return "NoSpace";
    case FsErrc::InvalidPath: return "InvalidPath";
    case FsErrc::NoFilesystem: return "NoFilesystem";
    case FsErrc::NothingToCollect: return "NothingToCollect";
    case FsErrc::PartitionTooSmall: return "PartitionTooSmall";
  }
  return "?";
}

class FsError : public std::runtime_error {
 public:
  FsError(FsErrc code, std::string_view what)
      : std::runtime_error(std::string(to_string(code)) + ": " + std::string(what)), code_(code) {}
  FsErrc code() const { return code_; }

 private:
  FsErrc code_;
};

}  // namespace ffsarena
