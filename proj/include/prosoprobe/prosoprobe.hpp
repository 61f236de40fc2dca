#pragma once

#include "prosoprobe/bert.hpp"
#include "prosoprobe/bert_encoder.hpp"
#include "prosoprobe/cache.hpp"
#include "prosoprobe/core.hpp"
#include "prosoprobe/corpus.hpp"
#include "prosoprobe/encoder.hpp"
#include "prosoprobe/probe.hpp"
#include "prosoprobe/report.hpp"
#include "prosoprobe/synthetic.hpp"
#include "prosoprobe/tagger.hpp"
#include "prosoprobe/tensor_file.hpp"
#include "prosoprobe/trainer.hpp"
#include "prosoprobe/upos.hpp"
#include "prosoprobe/wordpiece.hpp"
