import pytest

from compdepth import CameraIntrinsics


@pytest.fixture
def kitti_cam():
    """Intrinsics of a typical KITTI left color camera."""
    return CameraIntrinsics(f_x=721.5377, f_y=721.5377, c_u=609.5593, c_v=172.854)


@pytest.fixture
def simple_cam():
    """Round numbers so expected pixels can be derived by hand."""
    return CameraIntrinsics(f_x=700.0, f_y=700.0, c_u=600.0, c_v=200.0)
