#pragma once

#include "ffsarena/bench.hpp"
#include "ffsarena/bytes.hpp"
#include "ffsarena/codec.hpp"
#include "ffsarena/flash.hpp"
#include "ffsarena/fs_ops.hpp"
#include "ffsarena/jffs2.hpp"
#include "ffsarena/refmodel.hpp"
#include "ffsarena/treegen.hpp"
#include "ffsarena/ubi.hpp"
#include "ffsarena/ubifs.hpp"
#include "ffsarena/volume.hpp"
#include "ffsarena/yaffs2.hpp"
