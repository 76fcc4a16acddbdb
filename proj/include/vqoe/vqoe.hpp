#pragma once

#include "vqoe/confusion.hpp"
#include "vqoe/error.hpp"
#include "vqoe/evaluation.hpp"
#include "vqoe/features.hpp"
#include "vqoe/forest.hpp"
#include "vqoe/frame_assembly.hpp"
#include "vqoe/ingest.hpp"
#include "vqoe/media_classifier.hpp"
#include "vqoe/pipeline.hpp"
#include "vqoe/qoe_heuristics.hpp"
#include "vqoe/session_model.hpp"
#include "vqoe/synth.hpp"
