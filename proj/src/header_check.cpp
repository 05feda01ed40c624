// Pulls every public header into one translation unit under strict warnings.
#include "ffsarena/bytes.hpp"
#include "ffsarena/flash.hpp"
#include "ffsarena/codec.hpp"
#include "ffsarena/fs_types.hpp"
#include "ffsarena/meta_cache.hpp"
#include "ffsarena/volume.hpp"
#include "ffsarena/jffs2.hpp"
#include "ffsarena/yaffs2.hpp"
#include "ffsarena/ubi.hpp"
#include "ffsarena/ubifs.hpp"
#include "ffsarena/treegen.hpp"
#include "ffsarena/fs_ops.hpp"
#include "ffsarena/refmodel.hpp"
#include "ffsarena/bench.hpp"
#include "ffsarena/ffsarena.hpp"
