import numpy as np
import pytest

from conftest import make_sequence, random_frames
from i2s import ensemble, pipeline
from i2s.aggregate import DescriptorConfig
from i2s.ensemble import TrainParams

FAST = TrainParams(rounds=5, max_depth=3, seed=9)
SOKI = DescriptorConfig.from_string("SOKI")
IONLY = DescriptorConfig.from_string("I")


class TestAugmentFeatures:
    def test_appends_code(self):
        out = pipeline.augment_features([0.5, 2.0], "box", {"box": 0, "cup": 1})
        assert out.tolist() == [0.5, 2.0, 0.0]

    def test_input_unmodified(self):
        vec = np.array([1.0, 2.0])
        pipeline.augment_features(vec, "cup", {"box": 0, "cup": 1})
        assert vec.tolist() == [1.0, 2.0]

    def test_appending_twice(self):
        d = {"box": 0, "cup": 1}
        out = pipeline.augment_features([0.5, 2.0], "box", d)
        out = pipeline.augment_features(out, "cup", d)
        assert out.tolist() == [0.5, 2.0, 0.0, 1.0]

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown label 'jar'"):
            pipeline.augment_features([0.5], "jar", {"box": 0})


class TestTrainPipeline:
    def test_stage_feature_counts(self, tiny_synth):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        d = IONLY.size
        assert model.stage1.feature_count == d
        assert model.stage2.feature_count == d + 1
        assert model.stage3.feature_count == d + 2

    def test_single_object_errors_with_stage_name(self, rng):
        seqs = [
            make_sequence(
                random_frames(rng, t=6),
                seq_id=f"s{i}",
                subject=f"sub{i % 2}",
                obj="box",
                interaction=f"box_{'use' if i % 2 else 'grasp'}",
            )
            for i in range(6)
        ]
        from i2s.pose import Dataset

        with pytest.raises(ValueError, match="stage 1 needs ≥2 classes"):
            pipeline.train_pipeline(Dataset(tuple(seqs)), IONLY, FAST)

    def test_single_hoi_errors_with_stage_name(self, rng):
        from i2s.pose import Dataset

        seqs = [
            make_sequence(
                random_frames(rng, t=6),
                seq_id=f"s{i}",
                subject=f"sub{i % 2}",
                obj=f"obj{i % 2}",
                interaction="same",
            )
            for i in range(6)
        ]
        with pytest.raises(ValueError, match="stage 2 needs ≥2 classes"):
            pipeline.train_pipeline(Dataset(tuple(seqs)), IONLY, FAST)

    def test_single_subject_errors_with_stage_name(self, rng):
        from i2s.pose import Dataset

        seqs = [
            make_sequence(
                random_frames(rng, t=6),
                seq_id=f"s{i}",
                subject="only",
                obj=f"obj{i % 2}",
                interaction=f"obj{i % 2}_use",
            )
            for i in range(6)
        ]
        with pytest.raises(ValueError, match="stage 3 needs ≥2 classes"):
            pipeline.train_pipeline(Dataset(tuple(seqs)), IONLY, FAST)

    def test_deterministic(self, tiny_synth):
        a = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        b = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        for stage in ("stage1", "stage2", "stage3"):
            assert ensemble.to_bytes(getattr(a, stage)) == ensemble.to_bytes(
                getattr(b, stage)
            )
        for seq in tiny_synth:
            pa = pipeline.predict_pipeline(a, seq)
            pb = pipeline.predict_pipeline(b, seq)
            assert pa == pb

    def test_augment_none_keeps_stage1_identical(self, tiny_synth):
        with_aug = pipeline.train_pipeline(tiny_synth, IONLY, FAST, augment="truth")
        without = pipeline.train_pipeline(tiny_synth, IONLY, FAST, augment="none")
        assert ensemble.to_bytes(with_aug.stage1) == ensemble.to_bytes(without.stage1)
        assert without.stage2.feature_count == IONLY.size
        assert without.stage3.feature_count == IONLY.size
        assert not without.augmented

    def test_oof_augmentation_mode(self, tiny_synth):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST, augment="oof")
        assert model.stage2.feature_count == IONLY.size + 1
        assert model.stage3.feature_count == IONLY.size + 2
        again = pipeline.train_pipeline(tiny_synth, IONLY, FAST, augment="oof")
        assert ensemble.to_bytes(model.stage3) == ensemble.to_bytes(again.stage3)

    def test_invalid_augment_mode(self, tiny_synth):
        with pytest.raises(ValueError, match="augment"):
            pipeline.train_pipeline(tiny_synth, IONLY, FAST, augment="bogus")


class TestPredictPipeline:
    def test_chaining_appends_predicted_codes(self, tiny_synth):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        for seq in list(tiny_synth)[::5]:
            trace = pipeline.predict_pipeline_traced(model, seq)
            pred = trace.prediction
            d = IONLY.size
            assert trace.stage2_input.shape == (d + 1,)
            assert trace.stage3_input.shape == (d + 2,)
            assert trace.stage2_input[d] == float(model.object_codes[pred.object])
            assert trace.stage3_input[d] == float(model.object_codes[pred.object])
            assert trace.stage3_input[d + 1] == float(model.hoi_codes[pred.hoi])

    def test_scores_are_full_maps(self, tiny_synth):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        pred = pipeline.predict_pipeline(model, tiny_synth[0])
        assert set(pred.object_scores) == set(model.stage1.classes)
        assert set(pred.hoi_scores) == set(model.stage2.classes)
        assert set(pred.subject_scores) == set(model.stage3.classes)
        assert sum(pred.subject_scores.values()) == pytest.approx(1.0, abs=1e-9)

    def test_descriptor_length_mismatch(self, tiny_synth):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        with pytest.raises(ValueError, match="descriptor length mismatch"):
            pipeline.predict_features(model, np.zeros((1, IONLY.size + 5)))

    def test_tied_stage1_still_chains(self, tiny_synth):
        """All-zero ensembles: every stage ties, lowest codes win everywhere."""
        real = pipeline.train_pipeline(tiny_synth, IONLY, FAST)

        def zero_like(stage):
            return ensemble.EnsembleModel(
                classes=stage.classes,
                trees=[],
                params=stage.params,
                feature_count=stage.feature_count,
            )

        model = pipeline.I2SModel(
            stage1=zero_like(real.stage1),
            stage2=zero_like(real.stage2),
            stage3=zero_like(real.stage3),
            config=IONLY,
            object_codes=real.object_codes,
            hoi_codes=real.hoi_codes,
        )
        pred = pipeline.predict_pipeline(model, tiny_synth[0])
        assert pred.object == model.stage1.classes[0]
        assert pred.hoi == model.stage2.classes[0]
        assert pred.subject == model.stage3.classes[0]

    def test_batch_matches_traced(self, tiny_synth):
        from i2s.aggregate import descriptor_matrix

        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        X = descriptor_matrix(tiny_synth, IONLY)
        batch = pipeline.predict_features(model, X)
        for i, seq in enumerate(tiny_synth):
            single = pipeline.predict_pipeline_traced(model, seq).prediction
            assert batch[i] == single


class TestPersistence:
    def test_directory_round_trip(self, tiny_synth, tmp_path):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        total = pipeline.save_pipeline(model, tmp_path / "model")
        assert total == pipeline.pipeline_bytes(model)
        loaded = pipeline.load_pipeline(tmp_path / "model")
        assert loaded.object_codes == model.object_codes
        assert loaded.hoi_codes == model.hoi_codes
        assert str(loaded.config) == str(model.config)
        for seq in list(tiny_synth)[::7]:
            assert pipeline.predict_pipeline(loaded, seq) == pipeline.predict_pipeline(
                model, seq
            )

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ValueError, match="manifest"):
            pipeline.load_pipeline(tmp_path)

    def test_feature_count_invariants_enforced(self, tiny_synth):
        model = pipeline.train_pipeline(tiny_synth, IONLY, FAST)
        with pytest.raises(ValueError, match="stage 2 feature count"):
            pipeline.I2SModel(
                stage1=model.stage1,
                stage2=model.stage1,  # wrong width
                stage3=model.stage3,
                config=IONLY,
                object_codes=model.object_codes,
                hoi_codes=model.hoi_codes,
            )
