"""Unit tests for problem instances, uncertainty sets and CSV storage."""
import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from app.core.exceptions import InputError, RankDeficientError, ShapeMismatchError
from app.problems.models import Box, FixedPoint, ProblemInstance, Proportional, QuantizationSpec, UncertaintySet
from app.problems.repository import read_matrix, read_vector, write_matrix, write_vector
from app.problems.service import delta_from_round_digit, materialize_box


class TestProblemInstance:
    """Test cases for ProblemInstance validation."""

    def test_shapes(self, one_d):
        """Test m and n come from A"""
        assert (one_d.m, one_d.n) == (3, 1)

    def test_rhs_length_mismatch(self):
        """Test b must have one entry per row"""
        with pytest.raises(ValidationError):
            ProblemInstance(A=np.ones((3, 2)), b=[1.0, 2.0])

    def test_non_finite(self):
        """Test infinite entries are rejected"""
        with pytest.raises(ValidationError):
            ProblemInstance(A=[[1.0], [np.inf]], b=[1.0, 2.0])

    def test_square_instance_allowed(self, scalar):
        """Test square instances construct but are not overdetermined"""
        with pytest.raises(ShapeMismatchError):
            scalar.require_overdetermined()

    def test_rank_deficient(self):
        """Test duplicated columns fail the rank check"""
        p = ProblemInstance(A=[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], b=[1.0, 2.0, 3.0])
        with pytest.raises(RankDeficientError):
            p.require_full_rank()

    def test_residual(self, one_d):
        """Test c = Ax - b"""
        np.testing.assert_allclose(one_d.residual([0.0]), [-1.0, 1.0, -1.0])

    def test_check_x_length(self, one_d):
        """Test a solution of the wrong length is rejected"""
        with pytest.raises(ShapeMismatchError):
            one_d.check_x([1.0, 2.0])


class TestUncertaintySets:
    """Test cases for uncertainty set models."""

    def test_discriminated_union(self):
        """Test the kind field selects the flavour"""
        adapter = TypeAdapter(UncertaintySet)
        assert isinstance(adapter.validate_python({"kind": "fixed_point", "delta": 0.1}), FixedPoint)
        assert isinstance(adapter.validate_python({"kind": "proportional", "p": 0.01}), Proportional)

    def test_negative_delta(self):
        """Test delta must be non-negative"""
        with pytest.raises(ValidationError):
            FixedPoint(delta=-1.0)

    def test_negative_box(self):
        """Test a box with a negative bound is rejected"""
        with pytest.raises(ValidationError):
            Box(D=[[1.0, -0.1]])

    def test_describe(self):
        """Test the human-readable summary names the parameter"""
        assert "0.005" in FixedPoint(delta=0.005).describe()


class TestQuantization:
    """Test cases for rounding digits and the implied delta."""

    @pytest.mark.parametrize("digit,delta", [(2, 0.005), (4, 0.5e-4), (0, 0.5)])
    def test_delta_from_round_digit(self, digit, delta):
        """Test delta is half a unit in the last kept place"""
        assert delta_from_round_digit(QuantizationSpec(round_digit=digit)).delta == pytest.approx(delta, rel=1e-15)

    def test_digit_two_is_exact(self):
        """Test the common digit prints without representation noise"""
        assert repr(delta_from_round_digit(QuantizationSpec(round_digit=2)).delta) == "0.005"

    def test_digit_out_of_range(self):
        """Test digits outside [-6, 12] are rejected"""
        with pytest.raises(ValidationError):
            QuantizationSpec(round_digit=13)


class TestMaterializeBox:
    """Test cases for materialize_box."""

    def test_fixed_point(self):
        """Test a uniform bound fills the matrix"""
        np.testing.assert_array_equal(materialize_box(FixedPoint(delta=0.005), np.zeros((2, 2))), np.full((2, 2), 0.005))

    def test_proportional(self):
        """Test bounds proportional to entry magnitudes"""
        D = materialize_box(Proportional(p=0.01), [[100.0, -2.0], [0.0, 1.0]])
        np.testing.assert_allclose(D, [[1.0, 0.02], [0.0, 0.01]])

    def test_box_identity(self):
        """Test an explicit box is returned unchanged"""
        D = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_array_equal(materialize_box(Box(D=D), np.ones((2, 2))), D)

    def test_box_shape_mismatch(self):
        """Test a box of the wrong shape is rejected"""
        with pytest.raises(ShapeMismatchError):
            materialize_box(Box(D=np.ones((2, 2))), np.ones((3, 2)))


class TestCsvStorage:
    """Test cases for matrix and vector CSV files."""

    def test_matrix_full_precision(self, tmp_path, rng):
        """Test values survive a write/read cycle bit for bit"""
        A = rng.standard_normal((4, 3))
        path = tmp_path / "A.csv"
        write_matrix(path, A)
        np.testing.assert_array_equal(read_matrix(path), A)

    def test_vector_as_row_or_column(self, tmp_path):
        """Test a vector may be stored as one row or one column"""
        row = tmp_path / "row.csv"
        row.write_text("1,2,3\n")
        column = tmp_path / "column.csv"
        write_vector(column, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(read_vector(row), [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(read_vector(column), [1.0, 2.0, 3.0])

    def test_ragged_rows(self, tmp_path):
        """Test rows of different lengths are rejected"""
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ShapeMismatchError):
            read_matrix(path)

    def test_not_a_number(self, tmp_path):
        """Test a non-numeric field is an input error"""
        path = tmp_path / "bad.csv"
        path.write_text("1,abc\n")
        with pytest.raises(InputError):
            read_matrix(path)

    def test_missing_file(self, tmp_path):
        """Test a missing file is an input error"""
        with pytest.raises(InputError):
            read_matrix(tmp_path / "absent.csv")

    def test_matrix_is_not_a_vector(self, tmp_path):
        """Test a genuine matrix is rejected as a vector"""
        path = tmp_path / "M.csv"
        write_matrix(path, np.ones((2, 2)))
        with pytest.raises(ShapeMismatchError):
            read_vector(path)
