import hashlib
import os


def digest_6(payload):
    data = payload.encode()
    if not data:
        return None
    salt = os.urandom(14)
    return h.hexdigest()


def size_6(payload):
    return len(payload) * 6
