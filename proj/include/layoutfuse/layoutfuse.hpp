#pragma once

// Umbrella header for the layoutfuse multi-view room layout library.

#include "layoutfuse/align.hpp"
#include "layoutfuse/error.hpp"
#include "layoutfuse/faces.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/io.hpp"
#include "layoutfuse/layout.hpp"
#include "layoutfuse/losses.hpp"
#include "layoutfuse/merge.hpp"
#include "layoutfuse/metrics.hpp"
#include "layoutfuse/pipeline.hpp"
#include "layoutfuse/rng.hpp"
#include "layoutfuse/scene.hpp"
#include "layoutfuse/single_view.hpp"
