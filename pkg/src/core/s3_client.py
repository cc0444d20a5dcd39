"""
S3 access for corpus input and report publishing
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple

import boto3
import botocore

from src.utils.errors import StorageError


def parse_s3_uri(uri: str) -> Tuple[str, str]:
    """Split s3://bucket/key into (bucket, key)"""
    if not uri.startswith("s3://"):
        raise StorageError(f"not an s3:// URI: {uri}")
    bucket, _, key = uri[len("s3://"):].partition("/")
    if not bucket:
        raise StorageError(f"missing bucket in {uri}")
    return bucket, key


class S3Client:
    """Reads corpus objects from S3 and uploads report directories"""

    def __init__(self, profile: Optional[str] = None):
        self.profile = profile
        self.s3_client = None
        self.logger = logging.getLogger(__name__)

    def initialize(self):
        """Initialize the S3 client"""
        try:
            session = boto3.Session(profile_name=self.profile) if self.profile else boto3.Session()
            self.s3_client = session.client("s3")
            self.logger.info("S3 client initialized successfully")
        except botocore.exceptions.ProfileNotFound as e:
            raise StorageError(f"AWS profile not found: {e}") from e
        except Exception as e:
            raise StorageError(f"Failed to initialize S3 client: {e}") from e

    def _client(self):
        if self.s3_client is None:
            self.initialize()
        return self.s3_client

    def read_text(self, uri: str, encoding: str = "utf-8") -> str:
        """Download an object and decode it as text"""
        bucket, key = parse_s3_uri(uri)
        try:
            response = self._client().get_object(Bucket=bucket, Key=key)
            return response["Body"].read().decode(encoding)
        except botocore.exceptions.NoCredentialsError as e:
            raise StorageError("AWS credentials not found. Please configure your AWS credentials.") from e
        except Exception as e:
            self.logger.error(f"Failed to read {uri}: {e}")
            raise StorageError(f"cannot read {uri}: {e}") from e

    def list_keys(self, bucket: str, prefix: str = "") -> List[str]:
        """All object keys under a prefix"""
        try:
            keys = []
            paginator = self._client().get_paginator("list_objects_v2")
            for page in paginator.paginate(Bucket=bucket, Prefix=prefix):
                keys.extend(obj["Key"] for obj in page.get("Contents", []))
            return keys
        except Exception as e:
            self.logger.error(f"Failed to list objects in {bucket}/{prefix}: {e}")
            raise StorageError(f"cannot list {bucket}/{prefix}: {e}") from e

    def read_prefix(self, uri: str, suffix: str = ".jsonl") -> str:
        """Concatenate every object under s3://bucket/prefix/ whose key ends with suffix, in key order"""
        bucket, prefix = parse_s3_uri(uri)
        keys = sorted(key for key in self.list_keys(bucket, prefix) if key.endswith(suffix))
        if not keys:
            raise StorageError(f"no {suffix} objects under {uri}")
        self.logger.info(f"Reading {len(keys)} object(s) under {uri}")
        parts = [self.read_text(f"s3://{bucket}/{key}") for key in keys]
        return "".join(part if part.endswith("\n") else part + "\n" for part in parts)

    def upload_object(self, local_path: str, bucket: str, key: str) -> bool:
        """Upload a local file to S3"""
        try:
            self._client().upload_file(local_path, bucket, key)
            self.logger.info(f"Uploaded {local_path} to {bucket}/{key}")
            return True
        except Exception as e:
            self.logger.error(f"Failed to upload {local_path}: {e}")
            raise StorageError(f"cannot upload {local_path}: {e}") from e

    def upload_directory(self, local_dir: str, uri: str) -> List[str]:
        """Mirror every file below local_dir to s3://bucket/prefix, returning the keys"""
        bucket, prefix = parse_s3_uri(uri)
        root = Path(local_dir)
        uploaded = []
        for path in sorted(p for p in root.rglob("*") if p.is_file()):
            key = "/".join(part for part in (prefix.rstrip("/"), path.relative_to(root).as_posix()) if part)
            self.upload_object(str(path), bucket, key)
            uploaded.append(key)
        self.logger.info(f"Published {len(uploaded)} file(s) to s3://{bucket}/{prefix}")
        return uploaded
